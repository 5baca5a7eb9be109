#pragma once

#include "lqgan/analysis.hpp"
#include "lqgan/dynamics.hpp"
#include "lqgan/fields.hpp"
#include "lqgan/fixtures.hpp"
#include "lqgan/harness.hpp"
#include "lqgan/io.hpp"
#include "lqgan/model.hpp"
#include "lqgan/stagewise.hpp"
