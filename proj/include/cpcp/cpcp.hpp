#pragma once

#include "cpcp/tensor.hpp"
#include "cpcp/spectra.hpp"
#include "cpcp/reduced.hpp"
#include "cpcp/centroid.hpp"
#include "cpcp/solvers.hpp"
#include "cpcp/diagnostics.hpp"
