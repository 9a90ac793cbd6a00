#pragma once

// Umbrella header: every module plus scenario driver and serialization.
#include "hhs/common.hpp"
#include "hhs/group.hpp"
#include "hhs/graph.hpp"
#include "hhs/graph_io.hpp"
#include "hhs/metric.hpp"
#include "hhs/cayley.hpp"
#include "hhs/subgroup.hpp"
#include "hhs/coneoff.hpp"
#include "hhs/factor_system.hpp"
#include "hhs/hhs_instance.hpp"
#include "hhs/hhs_checks.hpp"
#include "hhs/embedding.hpp"
#include "hhs/gog.hpp"
#include "hhs/serialize.hpp"
#include "hhs/scenario.hpp"
