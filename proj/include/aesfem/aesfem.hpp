// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "aesfem/assembly.hpp"
#include "aesfem/delaunay.hpp"
#include "aesfem/harness.hpp"
#include "aesfem/linalg/condest.hpp"
#include "aesfem/linalg/krylov.hpp"
#include "aesfem/linalg/preconditioners.hpp"
#include "aesfem/linalg/sparse.hpp"
#include "aesfem/mesh.hpp"
#include "aesfem/mesh_io.hpp"
#include "aesfem/problem.hpp"
#include "aesfem/quadrature.hpp"
#include "aesfem/stencil.hpp"
#include "aesfem/wls.hpp"
