#pragma once

#include "implev/error.hpp"
#include "implev/implied_regression.hpp"
#include "implev/leverage_estimator.hpp"
#include "implev/leverage_sim.hpp"
#include "implev/market_data.hpp"
#include "implev/smile_theory.hpp"
#include "implev/version.hpp"
#include "implev/io.hpp"
