#pragma once

#include "mlmom/checks.hpp"
#include "mlmom/design.hpp"
#include "mlmom/distribution.hpp"
#include "mlmom/enumeration.hpp"
#include "mlmom/error.hpp"
#include "mlmom/ingest.hpp"
#include "mlmom/kernel.hpp"
#include "mlmom/monte_carlo.hpp"
#include "mlmom/number.hpp"
#include "mlmom/statistic.hpp"
#include "mlmom/three_level.hpp"
#include "mlmom/two_level.hpp"
#include "mlmom/version.hpp"
