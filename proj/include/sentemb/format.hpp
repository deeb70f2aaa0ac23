// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>

#include "sentemb/real.hpp"

SENTEMB_NAMESPACE_BEGIN

/// Shortest decimal text that parses back to exactly the same value.
std::string format_shortest(double value);
std::string format_shortest(float value);

SENTEMB_NAMESPACE_END
