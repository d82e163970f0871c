#pragma once

#include "kamtori/birkhoff.hpp"
#include "kamtori/continuation.hpp"
#include "kamtori/flow.hpp"
#include "kamtori/frames.hpp"
#include "kamtori/initial_torus.hpp"
#include "kamtori/kam.hpp"
#include "kamtori/ktf.hpp"
#include "kamtori/log.hpp"
#include "kamtori/models/pendulum.hpp"
#include "kamtori/models/tokamak.hpp"
