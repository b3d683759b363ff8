#pragma once

#include "demos.hpp"
#include "dense.hpp"
#include "divdiff.hpp"
#include "error.hpp"
#include "lattice.hpp"
#include "oracle.hpp"
#include "pmr.hpp"
#include "potential.hpp"
#include "rng.hpp"
#include "scaled.hpp"
#include "walksum.hpp"
