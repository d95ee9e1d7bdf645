#pragma once

#include "kfinder/baselines.hpp"
#include "kfinder/clustering.hpp"
#include "kfinder/convex.hpp"
#include "kfinder/error.hpp"
#include "kfinder/generators.hpp"
#include "kfinder/io.hpp"
#include "kfinder/linalg.hpp"
#include "kfinder/means.hpp"
#include "kfinder/parallel.hpp"
#include "kfinder/peel.hpp"
#include "kfinder/random.hpp"
#include "kfinder/verifiers.hpp"
