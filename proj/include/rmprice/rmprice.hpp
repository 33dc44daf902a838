#pragma once

#include "rmprice/config.hpp"
#include "rmprice/economics.hpp"
#include "rmprice/equilibrium.hpp"
#include "rmprice/errors.hpp"
#include "rmprice/experiment.hpp"
#include "rmprice/market.hpp"
#include "rmprice/money.hpp"
#include "rmprice/pricing.hpp"
#include "rmprice/regret.hpp"
#include "rmprice/rng.hpp"
#include "rmprice/simulator.hpp"
#include "rmprice/types.hpp"
