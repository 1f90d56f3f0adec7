#include "lanealloc/od.hpp"

#include <fstream>
#include <set>
#include <sstream>
#include <utility>

namespace lanealloc {

std::size_t OdMatrix::num_demand() const {
  std::size_t n = 0;
  for (const auto& p : pairs) n += p.is_aux ? 0 : 1;
  return n;
}

std::size_t OdMatrix::num_aux() const { return pairs.size() - num_demand(); }

void validate_od(const OdMatrix& od, std::size_t num_nodes) {
  const auto n = static_cast<NodeIndex>(num_nodes);
  std::set<std::pair<NodeIndex, NodeIndex>> demand;
  std::vector<int> aux_next(num_nodes, -1);
  std::size_t aux_count = 0;
  for (std::size_t i = 0; i < od.pairs.size(); ++i) {
    const OdPair& p = od.pairs[i];
    const std::string where = "OD pair " + std::to_string(i);
    if (p.s < 0 || p.s >= n || p.t < 0 || p.t >= n) {
      throw InvalidInstance(where + ": node out of range");
    }
    if (p.s == p.t) throw InvalidInstance(where + ": s == t");
    if (p.flow < 1) throw InvalidInstance(where + ": flow must be >= 1");
    if (!(p.weight_bike >= 0.0) || !(p.weight_car >= 0.0)) {
      throw InvalidInstance(where + ": weights must be nonnegative");
    }
    if (p.is_aux) {
      if (p.weight_bike != 0.0 || p.weight_car != 0.0 || p.flow != 1) {
        throw InvalidInstance(where + ": auxiliary pairs need zero weights and flow 1");
      }
      if (aux_next[p.s] != -1) {
        throw InvalidInstance(where + ": auxiliary chain leaves a node twice");
      }
      aux_next[p.s] = p.t;
      ++aux_count;
    } else if (!demand.emplace(p.s, p.t).second) {
      throw InvalidInstance(where + ": duplicate demand pair");
    }
  }
  if (aux_count == 0) return;
  if (aux_count != num_nodes) {
    throw InvalidInstance("auxiliary pairs must cover every node exactly once");
  }
  NodeIndex v = 0;
  for (std::size_t step = 0; step < num_nodes; ++step) {
    v = aux_next[v];
    if (v < 0) throw InvalidInstance("auxiliary chain is broken");
    if (v == 0 && step + 1 != num_nodes) {
      throw InvalidInstance("auxiliary pairs form more than one cycle");
    }
  }
  if (v != 0) throw InvalidInstance("auxiliary pairs do not close into a cycle");
}

std::string od_to_csv(const OdMatrix& od, const StreetGraph& g) {
  std::ostringstream out;
  out.precision(17);
  out << "s,t,weight_bike,weight_car,flow,is_aux\n";
  for (const auto& p : od.pairs) {
    out << g.node(p.s).id << ',' << g.node(p.t).id << ',' << p.weight_bike << ','
        << p.weight_car << ',' << p.flow << ',' << (p.is_aux ? 1 : 0) << '\n';
  }
  return out.str();
}

OdMatrix od_from_csv(const std::string& text, const StreetGraph& g) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw InvalidInstance("OD CSV is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "s,t,weight_bike,weight_car,flow,is_aux") {
    throw InvalidInstance("OD CSV header mismatch: " + line);
  }
  OdMatrix od;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() != 6) {
      throw InvalidInstance("OD CSV row " + std::to_string(row) + ": expected 6 fields");
    }
    try {
      auto s = g.find_node(std::stoll(cells[0]));
      auto t = g.find_node(std::stoll(cells[1]));
      if (!s || !t) {
        throw InvalidInstance("OD CSV row " + std::to_string(row) + ": unknown node id");
      }
      OdPair p;
      p.s = *s;
      p.t = *t;
      p.weight_bike = std::stod(cells[2]);
      p.weight_car = std::stod(cells[3]);
      p.flow = std::stoi(cells[4]);
      p.is_aux = cells[5] == "1" || cells[5] == "true";
      od.pairs.push_back(p);
    } catch (const std::logic_error&) {
      throw InvalidInstance("OD CSV row " + std::to_string(row) + ": malformed number");
    }
  }
  validate_od(od, g.num_nodes());
  return od;
}

OdMatrix load_od(const std::string& path, const StreetGraph& g) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open OD file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return od_from_csv(buf.str(), g);
}

void save_od(const OdMatrix& od, const StreetGraph& g, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write OD file: " + path);
  out << od_to_csv(od, g);
}

}  // namespace lanealloc
