#pragma once

// Umbrella header.

#include "hss/applications.hpp"
#include "hss/bounds.hpp"
#include "hss/complexity.hpp"
#include "hss/core.hpp"
#include "hss/enumerate.hpp"
#include "hss/errors.hpp"
#include "hss/experiment.hpp"
#include "hss/hypothesis_set.hpp"
#include "hss/linalg.hpp"
#include "hss/mechanisms.hpp"
#include "hss/oracle.hpp"
#include "hss/parallel.hpp"
#include "hss/report_io.hpp"
#include "hss/rng.hpp"
#include "hss/stability.hpp"
