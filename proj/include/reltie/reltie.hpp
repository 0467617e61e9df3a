// reltie: significance testing of bilateral ties in temporal transaction networks.
// Requirements: C++20, Eigen 3.3+; io.hpp also needs nlohmann/json

#pragma once

#include <reltie/analysis.hpp>
#include <reltie/core.hpp>
#include <reltie/distributions.hpp>
#include <reltie/fitness.hpp>
#include <reltie/ingest.hpp>
#include <reltie/parallel.hpp>
#include <reltie/random.hpp>
#include <reltie/sigtest.hpp>
#include <reltie/synth.hpp>
