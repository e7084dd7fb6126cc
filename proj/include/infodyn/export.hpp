#pragma once

#include <cstddef>
#include <cstdio>
#include <string>
#include <vector>

#include "infodyn/inference.hpp"

namespace infodyn {

/// Graphviz digraph: every process as a node, one edge per FDR-surviving
/// link labelled with its weight and delay.
inline std::string to_dot(const NetworkResult& net) {
  std::string out = "digraph network {\n";
  for (std::size_t p = 0; p < net.n_processes; ++p) out += "  p" + std::to_string(p) + ";\n";
  for (const auto& l : net.adjacency()) {
    char label[64];
    std::snprintf(label, sizeof label, "w=%.3f, d=%zu", l.weight_bits, l.delay);
    out += "  p" + std::to_string(l.source) + " -> p" + std::to_string(l.target) + " [label=\"" + label + "\"];\n";
  }
  out += "}\n";
  return out;
}

/// Dense weight matrix, row = source, column = target, zero where no link
/// survived FDR.
inline std::string to_csv_adjacency(const NetworkResult& net) {
  const std::size_t n = net.n_processes;
  std::vector<double> w(n * n, 0.0);
  for (const auto& l : net.adjacency()) w[l.source * n + l.target] = l.weight_bits;
  std::string out;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      char cell[40];
      std::snprintf(cell, sizeof cell, "%.17g", w[i * n + j]);
      if (j) out += ',';
      out += cell;
    }
    out += '\n';
  }
  return out;
}

}  // namespace infodyn
