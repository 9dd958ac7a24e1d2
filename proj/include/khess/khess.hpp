#pragma once

#include "khess/error.hpp"
#include "khess/hessalg.hpp"
#include "khess/polyfield.hpp"
#include "khess/jet.hpp"
#include "khess/stock_fields.hpp"
#include "khess/newton_poly.hpp"
#include "khess/quadrature.hpp"
#include "khess/geometry.hpp"
#include "khess/energy.hpp"
#include "khess/varcheck.hpp"
