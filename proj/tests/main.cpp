#include <gtest/gtest.h>

#include <cstring>
#include <string>

#include "test_util.hpp"

namespace lpn_test {
std::string g_cli_bin;
}

int main(int argc, char** argv) {
    ::testing::InitGoogleTest(&argc, argv);
    for (int i = 1; i < argc; ++i) {
        const char* prefix = "--cli-bin=";
        if (std::strncmp(argv[i], prefix, std::strlen(prefix)) == 0) {
            lpn_test::g_cli_bin = argv[i] + std::strlen(prefix);
        }
    }
    return RUN_ALL_TESTS();
}
