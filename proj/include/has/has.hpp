#ifndef HAS_HAS_HPP
#define HAS_HAS_HPP

#include "has/apm.hpp"
#include "has/aspm.hpp"
#include "has/catalog.hpp"
#include "has/errors.hpp"
#include "has/json_io.hpp"
#include "has/lower.hpp"
#include "has/psm.hpp"
#include "has/repo.hpp"
#include "has/schedule.hpp"
#include "has/sim.hpp"
#include "has/time.hpp"
#include "has/validation.hpp"
#include "has/xform.hpp"

#endif
