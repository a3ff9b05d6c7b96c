// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace twotone {

// Invalid parameters or scenario fields. The CLI maps this to exit code 2.
class ConfigError : public std::runtime_error
{
  public:
    using std::runtime_error::runtime_error;
};

// Estimation could not proceed on the supplied data. Exit code 3.
class AnalysisError : public std::runtime_error
{
  public:
    using std::runtime_error::runtime_error;
};

} // namespace twotone
