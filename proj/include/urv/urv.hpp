// Copyright (c) urv contributors.
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "urv/error.hpp"
#include "urv/rng.hpp"
#include "urv/lp.hpp"
#include "urv/geometry.hpp"
#include "urv/network.hpp"
#include "urv/underapprox.hpp"
#include "urv/properties.hpp"
#include "urv/exact_reach.hpp"
#include "urv/verifier.hpp"
#include "urv/report.hpp"
