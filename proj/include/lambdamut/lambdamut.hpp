#pragma once

#include "lambdamut/coalescent_sim.hpp"
#include "lambdamut/errors.hpp"
#include "lambdamut/exact_recursion.hpp"
#include "lambdamut/io.hpp"
#include "lambdamut/lambda_measure.hpp"
#include "lambdamut/measure_spec.hpp"
#include "lambdamut/nu_sampler.hpp"
#include "lambdamut/numerics.hpp"
#include "lambdamut/paintbox.hpp"
#include "lambdamut/partition.hpp"
#include "lambdamut/population.hpp"
#include "lambdamut/random.hpp"
#include "lambdamut/rational.hpp"
#include "lambdamut/stats.hpp"
#include "lambdamut/subordinator.hpp"
#include "lambdamut/validation.hpp"
