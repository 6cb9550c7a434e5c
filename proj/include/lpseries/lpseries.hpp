#pragma once

#include "numeric.hpp"
#include "crtbp_model.hpp"
#include "eta_poly.hpp"
#include "series.hpp"
#include "legendre.hpp"
#include "lp_constructor.hpp"
#include "bifurcation.hpp"
#include "orbit_service.hpp"
#include "dop853.hpp"
#include "validation.hpp"
#include "coef_file.hpp"
