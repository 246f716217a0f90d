#pragma once

// Umbrella header for the ifsl library.

#include "ifsl/core.hpp"
#include "ifsl/symbolic.hpp"
#include "ifsl/poly.hpp"
#include "ifsl/maps.hpp"
#include "ifsl/dimension.hpp"
#include "ifsl/separation.hpp"
#include "ifsl/transversality.hpp"
#include "ifsl/witness.hpp"
#include "ifsl/io.hpp"
