// SPDX-License-Identifier: MIT
#include "translog/series.hpp"
