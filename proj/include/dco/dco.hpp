#pragma once

#include "dco/core.hpp"
#include "dco/dissipator.hpp"
#include "dco/dynamics.hpp"
#include "dco/io.hpp"
#include "dco/objectives.hpp"
#include "dco/optimizer.hpp"
#include "dco/parallel.hpp"
#include "dco/solvers.hpp"
#include "dco/stabilizable.hpp"
#include "dco/state_search.hpp"
