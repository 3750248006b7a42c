#pragma once

namespace ldw::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitIo = 3;
inline constexpr int kExitNoOutput = 4;

int run(int argc, char** argv);

}  // namespace ldw::cli
