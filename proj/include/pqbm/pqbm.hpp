#pragma once

#include "pqbm/core.hpp"
#include "pqbm/bodies.hpp"
#include "pqbm/support.hpp"
#include "pqbm/density.hpp"
#include "pqbm/measures.hpp"
#include "pqbm/boundary.hpp"
#include "pqbm/global.hpp"
#include "pqbm/polytope.hpp"
#include "pqbm/conditions.hpp"
