#pragma once

// Minimizing-movement gradient flows on geodesic metric spaces, with an
// exactly solvable Euclidean instantiation and a reduced model of the
// space of Kahler potentials on the circle.

#include "mmflow/calabi_pde.hpp"
#include "mmflow/euclidean.hpp"
#include "mmflow/experiment.hpp"
#include "mmflow/geodesic.hpp"
#include "mmflow/io.hpp"
#include "mmflow/kahler_space.hpp"
#include "mmflow/mm.hpp"
#include "mmflow/space_checks.hpp"
#include "mmflow/surface.hpp"
