#pragma once

#include "distflow/attack.hpp"
#include "distflow/errors.hpp"
#include "distflow/io.hpp"
#include "distflow/linalg.hpp"
#include "distflow/loads.hpp"
#include "distflow/network.hpp"
#include "distflow/powerflow.hpp"
