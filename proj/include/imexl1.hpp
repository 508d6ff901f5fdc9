#pragma once

#include "imexl1/errors.hpp"
#include "imexl1/special.hpp"
#include "imexl1/quadrature.hpp"
#include "imexl1/fractime.hpp"
#include "imexl1/gronwall.hpp"
#include "imexl1/mesh2d.hpp"
#include "imexl1/mixedfem.hpp"
#include "imexl1/problems.hpp"
#include "imexl1/coupling.hpp"
#include "imexl1/solver.hpp"
#include "imexl1/stability.hpp"
#include "imexl1/harness.hpp"
#include "imexl1/verify.hpp"
#include "imexl1/config.hpp"
