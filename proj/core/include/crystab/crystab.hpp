#pragma once

#include "crystab/bloch.hpp"
#include "crystab/bloch_operators.hpp"
#include "crystab/density.hpp"
#include "crystab/dynamics.hpp"
#include "crystab/errors.hpp"
#include "crystab/ground_state.hpp"
#include "crystab/lattice.hpp"
#include "crystab/parallel.hpp"
#include "crystab/stability.hpp"
#include "crystab/supercell.hpp"
