#pragma once

#include "safeadp/errors.hpp"
#include "safeadp/types.hpp"
#include "safeadp/model.hpp"
#include "safeadp/cost.hpp"
#include "safeadp/staf.hpp"
#include "safeadp/critic.hpp"
#include "safeadp/qp.hpp"
#include "safeadp/clf_cbf_qp.hpp"
#include "safeadp/integrator.hpp"
#include "safeadp/record.hpp"
#include "safeadp/sim.hpp"
#include "safeadp/config.hpp"
