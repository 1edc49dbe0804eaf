#pragma once

#include "ranksig/compare.hpp"
#include "ranksig/dynamics.hpp"
#include "ranksig/error.hpp"
#include "ranksig/export.hpp"
#include "ranksig/ingest.hpp"
#include "ranksig/record.hpp"
#include "ranksig/siggraph.hpp"
#include "ranksig/stats.hpp"
