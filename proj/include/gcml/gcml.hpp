#pragma once

#include "gcml/config.hpp"
#include "gcml/damage.hpp"
#include "gcml/ensemble.hpp"
#include "gcml/error.hpp"
#include "gcml/experiment.hpp"
#include "gcml/lattice.hpp"
#include "gcml/lyapunov.hpp"
#include "gcml/map.hpp"
#include "gcml/observables.hpp"
#include "gcml/rng.hpp"
#include "gcml/scaling.hpp"
#include "gcml/series.hpp"
