// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "purikit/concurrence.hpp"
#include "purikit/eigen.hpp"
#include "purikit/errors.hpp"
#include "purikit/gellmann.hpp"
#include "purikit/lbfgsb.hpp"
#include "purikit/linalg.hpp"
#include "purikit/metrics.hpp"
#include "purikit/parallel.hpp"
#include "purikit/protocols.hpp"
#include "purikit/quantum.hpp"
#include "purikit/random.hpp"
#include "purikit/sampler.hpp"
#include "purikit/variational.hpp"
