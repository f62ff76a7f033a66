#pragma once

#include "qmemtime/decoherence.hpp"
#include "qmemtime/errors.hpp"
#include "qmemtime/isolation.hpp"
#include "qmemtime/moments.hpp"
#include "qmemtime/numerics.hpp"
#include "qmemtime/oqho_model.hpp"
#include "qmemtime/optimizer.hpp"
#include "qmemtime/reference.hpp"
