#pragma once

// p-adic quasi Gibbs measures for Potts models on rooted Cayley trees:
// exact and fixed-precision arithmetic in Q_p, boundary-field fixed points
// by ultrametric contraction, and exhaustive finite-volume verification.

#include <qgibbs/c0.hpp>
#include <qgibbs/config.hpp>
#include <qgibbs/literals.hpp>
#include <qgibbs/measure.hpp>
#include <qgibbs/model.hpp>
#include <qgibbs/padic.hpp>
#include <qgibbs/runner.hpp>
#include <qgibbs/sampling.hpp>
#include <qgibbs/solver.hpp>
#include <qgibbs/tree.hpp>
