#pragma once

#include "mgk/morse/expr.hpp"
#include "mgk/morse/flow.hpp"
#include "mgk/morse/gluing.hpp"
#include "mgk/morse/morse_complex.hpp"
#include "mgk/morse/sphere.hpp"
#include "mgk/morse/system.hpp"
#include "mgk/morse/theta.hpp"
