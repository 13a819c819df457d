// Copyright 2026 The fedlabel Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <ostream>

namespace fedlabel::cli {

/// Exit codes: 0 success, 1 usage error, 2 runtime error.
int run(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace fedlabel::cli
