// Copyright (c) the aclab contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

namespace aclab {

inline constexpr const char* kToolName = "aclab";
inline constexpr const char* kToolVersion = "0.1.0";

}  // namespace aclab
