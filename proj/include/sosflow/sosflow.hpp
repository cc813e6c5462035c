#pragma once

#include "sosflow/bcf.hpp"
#include "sosflow/config.hpp"
#include "sosflow/diagnostics.hpp"
#include "sosflow/errors.hpp"
#include "sosflow/evolution.hpp"
#include "sosflow/functional.hpp"
#include "sosflow/grid.hpp"
#include "sosflow/io.hpp"
#include "sosflow/record.hpp"
#include "sosflow/resolvent.hpp"
#include "sosflow/strong_form.hpp"
