#pragma once

#include "advinf/baselines.hpp"
#include "advinf/config.hpp"
#include "advinf/error.hpp"
#include "advinf/graph.hpp"
#include "advinf/influence.hpp"
#include "advinf/io.hpp"
#include "advinf/metrics.hpp"
#include "advinf/parallel.hpp"
#include "advinf/perturb.hpp"
#include "advinf/perturbation.hpp"
#include "advinf/pipeline.hpp"
#include "advinf/rng.hpp"
#include "advinf/sparse.hpp"
#include "advinf/surrogate.hpp"
#include "advinf/synthetic.hpp"
#include "advinf/types.hpp"
#include "advinf/victim.hpp"
