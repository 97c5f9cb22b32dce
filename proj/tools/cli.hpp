// SPDX-License-Identifier: Apache-2.0
#pragma once

namespace snn::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitData = 3;
inline constexpr int kExitNumeric = 4;

int run(int argc, char** argv);

}  // namespace snn::cli
