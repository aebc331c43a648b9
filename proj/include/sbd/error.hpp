// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace sbd {

/// Raised for malformed inputs and violated data invariants (bad files,
/// inconsistent annotations, out-of-range parameters). The CLI maps it to
/// exit code 2; anything else escaping is treated as an internal error.
class DataError : public std::runtime_error {
public:
    explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace sbd
