#pragma once

#include <iosfwd>
#include <string>

#include "usbs/problem.h"

namespace usbs {

/// MatrixMarket coordinate reader for graphs. Accepts pattern, real and
/// integer fields with symmetric or general symmetry. Pattern entries get
/// weight 1, repeated edges are summed and self-loops are dropped. A general
/// file must list every off-diagonal entry together with its mirror.
Graph parse_graph_mm(std::istream& in);
Graph read_graph_mm(const std::string& path);

/// Writes the graph as a real symmetric coordinate file (lower triangle).
void write_graph_mm(std::ostream& out, const Graph& g);
void save_graph_mm(const std::string& path, const Graph& g);

/// QAPLIB layout: the size n, then the n x n flow matrix W, then the n x n
/// distance matrix D, all whitespace separated.
QapInstance parse_qaplib(std::istream& in);
QapInstance read_qaplib(const std::string& path);

void write_qaplib(std::ostream& out, const QapInstance& q);
void save_qaplib(const std::string& path, const QapInstance& q);

}  // namespace usbs
