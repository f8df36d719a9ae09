// SPDX-License-Identifier: Apache-2.0
#include "cvs/common.hpp"
