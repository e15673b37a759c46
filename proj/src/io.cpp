#include "bpmm/io.hpp"

#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace bpmm {

namespace fs = std::filesystem;

namespace {

void write_u32(std::ostream& os, std::uint32_t v) { os.write(reinterpret_cast<const char*>(&v), 4); }
void write_u64(std::ostream& os, std::uint64_t v) { os.write(reinterpret_cast<const char*>(&v), 8); }

std::uint32_t read_u32(std::istream& is) {
  std::uint32_t v = 0;
  is.read(reinterpret_cast<char*>(&v), 4);
  return v;
}
std::uint64_t read_u64(std::istream& is) {
  std::uint64_t v = 0;
  is.read(reinterpret_cast<char*>(&v), 8);
  return v;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) {
    while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ')) cell.pop_back();
    std::size_t b = 0;
    while (b < cell.size() && cell[b] == ' ') ++b;
    out.push_back(cell.substr(b));
  }
  return out;
}

double parse_cell(const std::string& cell, const std::string& where) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(cell, &pos);
    if (pos != cell.size()) throw std::invalid_argument(cell);
    return v;  // NaN text parses fine; the validator reports it with its location
  } catch (const std::exception&) {
    throw std::runtime_error("non-numeric cell '" + cell + "' at " + where);
  }
}

Eigen::MatrixXd load_subject_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open data file: " + path);
  std::vector<std::vector<double>> rows;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    auto cells = split_csv_line(line);
    std::vector<double> row;
    row.reserve(cells.size());
    for (std::size_t c = 0; c < cells.size(); ++c)
      row.push_back(parse_cell(cells[c], path + ":" + std::to_string(lineno) + ":" + std::to_string(c + 1)));
    if (!rows.empty() && row.size() != rows[0].size())
      throw std::runtime_error("ragged row in " + path + " at line " + std::to_string(lineno));
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw std::runtime_error("empty data file: " + path);
  Eigen::MatrixXd m(rows.size(), rows[0].size());
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t c = 0; c < rows[r].size(); ++c) m(r, c) = rows[r][c];
  return m;
}

bool has_magic(const std::string& path, const char* magic) {
  std::ifstream in(path, std::ios::binary);
  char buf[4] = {0, 0, 0, 0};
  in.read(buf, 4);
  return in && std::memcmp(buf, magic, 4) == 0;
}

}  // namespace

PanelDataset load_panel(const std::string& data_path, const std::string& covariate_path, bool demean) {
  PanelDataset panel;

  if (has_magic(data_path, "BPMM")) {
    std::ifstream in(data_path, std::ios::binary);
    in.ignore(4);
    const std::uint32_t N = read_u32(in), V = read_u32(in), T = read_u32(in);
    read_u64(in);
    read_u64(in);  // pad
    if (!in) throw std::runtime_error("truncated header in " + data_path);
    panel.data.reserve(N);
    for (std::uint32_t i = 0; i < N; ++i) {
      Eigen::MatrixXd m(V, T);
      // payload order is (subject, node, scan): one contiguous V*T block per subject
      std::vector<double> buf(static_cast<std::size_t>(V) * T);
      in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size() * 8));
      if (!in) throw std::runtime_error("truncated payload in " + data_path);
      for (std::uint32_t v = 0; v < V; ++v)
        for (std::uint32_t t = 0; t < T; ++t) m(v, t) = buf[static_cast<std::size_t>(v) * T + t];
      panel.data.push_back(std::move(m));
      panel.subject_ids.push_back("s" + std::to_string(i + 1));
    }
  } else {
    // CSV manifest: "subject_id,relative_path" per line
    std::ifstream in(data_path);
    if (!in) throw std::runtime_error("cannot open manifest: " + data_path);
    const fs::path base = fs::path(data_path).parent_path();
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty() || line == "\r" || line[0] == '#') continue;
      auto cells = split_csv_line(line);
      if (cells.size() != 2) throw std::runtime_error("manifest line needs 'id,path': " + line);
      panel.subject_ids.push_back(cells[0]);
      const fs::path p = fs::path(cells[1]).is_absolute() ? fs::path(cells[1]) : base / cells[1];
      panel.data.push_back(load_subject_csv(p.string()));
    }
    if (panel.data.empty()) throw std::runtime_error("manifest lists no subjects: " + data_path);
  }

  // covariates: header line, then one row per subject
  {
    std::ifstream in(covariate_path);
    if (!in) throw std::runtime_error("cannot open covariate file: " + covariate_path);
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("empty covariate file");
    std::vector<std::vector<double>> rows;
    std::vector<std::string> ids;
    int lineno = 1;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.empty() || line == "\r") continue;
      auto cells = split_csv_line(line);
      if (cells.size() < 2) throw std::runtime_error("covariate row needs id + values at line " +
                                                     std::to_string(lineno));
      ids.push_back(cells[0]);
      std::vector<double> row;
      for (std::size_t c = 1; c < cells.size(); ++c)
        row.push_back(parse_cell(cells[c], covariate_path + ":" + std::to_string(lineno)));
      if (!rows.empty() && row.size() != rows[0].size())
        throw std::runtime_error("ragged covariate row at line " + std::to_string(lineno));
      rows.push_back(std::move(row));
    }
    if (static_cast<int>(rows.size()) != panel.n_subjects())
      throw std::runtime_error("covariate file has " + std::to_string(rows.size()) +
                               " rows for " + std::to_string(panel.n_subjects()) + " subjects");
    panel.covariates.resize(rows.size(), rows[0].size());
    for (std::size_t r = 0; r < rows.size(); ++r)
      for (std::size_t c = 0; c < rows[r].size(); ++c) panel.covariates(r, c) = rows[r][c];
    // if the data side produced synthetic ids, adopt the covariate ids
    bool synthetic = true;
    for (int i = 0; i < panel.n_subjects() && synthetic; ++i)
      synthetic = panel.subject_ids[i] == "s" + std::to_string(i + 1);
    if (synthetic) panel.subject_ids = ids;
  }

  panel.validate();
  if (demean) {
    for (auto& m : panel.data)
      for (int v = 0; v < m.rows(); ++v) m.row(v).array() -= m.row(v).mean();
  }
  return panel;
}

void save_panel_binary(const PanelDataset& panel, const std::string& data_path,
                       const std::string& covariate_path) {
  std::ofstream out(data_path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + data_path);
  out.write("BPMM", 4);
  write_u32(out, static_cast<std::uint32_t>(panel.n_subjects()));
  write_u32(out, static_cast<std::uint32_t>(panel.n_nodes()));
  write_u32(out, static_cast<std::uint32_t>(panel.n_scans()));
  write_u64(out, 0);
  write_u64(out, 0);
  const int V = panel.n_nodes(), T = panel.n_scans();
  std::vector<double> buf(static_cast<std::size_t>(V) * T);
  for (const auto& m : panel.data) {
    for (int v = 0; v < V; ++v)
      for (int t = 0; t < T; ++t) buf[static_cast<std::size_t>(v) * T + t] = m(v, t);
    out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size() * 8));
  }

  std::ofstream cov(covariate_path);
  if (!cov) throw std::runtime_error("cannot write " + covariate_path);
  cov << "subject_id";
  for (int c = 0; c < panel.covariates.cols(); ++c) cov << ",x" << (c + 1);
  cov << "\n";
  cov.precision(17);
  for (int i = 0; i < panel.n_subjects(); ++i) {
    cov << panel.subject_ids[i];
    for (int c = 0; c < panel.covariates.cols(); ++c) cov << "," << panel.covariates(i, c);
    cov << "\n";
  }
}

void save_panel_csv(const PanelDataset& panel, const std::string& manifest_path,
                    const std::string& covariate_path) {
  const fs::path base = fs::path(manifest_path).parent_path();
  std::ofstream man(manifest_path);
  if (!man) throw std::runtime_error("cannot write " + manifest_path);
  for (int i = 0; i < panel.n_subjects(); ++i) {
    const std::string fname = "subject_" + panel.subject_ids[i] + ".csv";
    man << panel.subject_ids[i] << "," << fname << "\n";
    std::ofstream out((base / fname).string());
    out.precision(12);
    for (int v = 0; v < panel.n_nodes(); ++v) {
      for (int t = 0; t < panel.n_scans(); ++t) out << (t ? "," : "") << panel.data[i](v, t);
      out << "\n";
    }
  }
  std::ofstream cov(covariate_path);
  cov << "subject_id";
  for (int c = 0; c < panel.covariates.cols(); ++c) cov << ",x" << (c + 1);
  cov << "\n";
  cov.precision(12);
  for (int i = 0; i < panel.n_subjects(); ++i) {
    cov << panel.subject_ids[i];
    for (int c = 0; c < panel.covariates.cols(); ++c) cov << "," << panel.covariates(i, c);
    cov << "\n";
  }
}

void save_tensor(const Tensor& t, const std::string& path) {
  if (t.magic.size() != 4) throw std::runtime_error("tensor magic must be 4 bytes");
  if (t.dims.empty() || t.dims.size() > 4) throw std::runtime_error("tensor rank must be 1..4");
  if (static_cast<std::int64_t>(t.values.size()) != t.size())
    throw std::runtime_error("tensor value count does not match dims");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out.write(t.magic.data(), 4);
  write_u32(out, static_cast<std::uint32_t>(t.dims.size()));
  for (std::size_t d = 0; d < 4; ++d)
    write_u32(out, d < t.dims.size() ? static_cast<std::uint32_t>(t.dims[d]) : 1u);
  write_u64(out, 0);
  out.write(reinterpret_cast<const char*>(t.values.data()),
            static_cast<std::streamsize>(t.values.size() * 8));
}

Tensor load_tensor(const std::string& path, const std::string& expect_magic) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  char magic[5] = {0};
  in.read(magic, 4);
  Tensor t;
  t.magic = magic;
  if (!expect_magic.empty() && t.magic != expect_magic)
    throw std::runtime_error(path + " has magic '" + t.magic + "', expected '" + expect_magic + "'");
  const std::uint32_t rank = read_u32(in);
  if (rank < 1 || rank > 4) throw std::runtime_error("bad tensor rank in " + path);
  std::uint32_t dims[4];
  for (auto& d : dims) d = read_u32(in);
  read_u64(in);
  t.dims.assign(dims, dims + rank);
  t.values.resize(static_cast<std::size_t>(t.size()));
  in.read(reinterpret_cast<char*>(t.values.data()), static_cast<std::streamsize>(t.values.size() * 8));
  if (!in) throw std::runtime_error("truncated tensor file " + path);
  return t;
}

void save_network_set(const DynamicNetworkSet& nets, const std::string& path) {
  Tensor t;
  const int N = nets.n_subjects(), T = nets.n_scans();
  if (nets.kind == NetworkKind::PairwiseFisherZ) {
    const int E = N ? static_cast<int>(nets.edges[0].cols()) : 0;
    t.magic = "BPMA";
    t.dims = {N, T, E};
    t.values.reserve(static_cast<std::size_t>(N) * T * E);
    for (int i = 0; i < N; ++i)
      for (int s = 0; s < T; ++s)
        for (int e = 0; e < E; ++e) t.values.push_back(nets.edges[i](s, e));
  } else {
    const int V = nets.n_nodes;
    t.magic = nets.kind == NetworkKind::Precision ? "BPMP" : "BPMC";
    t.dims = {N, T, V, V};
    t.values.reserve(static_cast<std::size_t>(N) * T * V * V);
    for (int i = 0; i < N; ++i)
      for (int s = 0; s < T; ++s)
        for (int r = 0; r < V; ++r)
          for (int c = 0; c < V; ++c) t.values.push_back(nets.matrices[i][s](r, c));
  }
  save_tensor(t, path);
}

DynamicNetworkSet load_network_set(const std::string& path) {
  Tensor t = load_tensor(path);
  DynamicNetworkSet nets;
  if (t.magic == "BPMA") {
    nets.kind = NetworkKind::PairwiseFisherZ;
    const int N = t.dims[0], T = t.dims[1], E = t.dims[2];
    nets.edges.resize(N);
    std::size_t k = 0;
    for (int i = 0; i < N; ++i) {
      nets.edges[i].resize(T, E);
      for (int s = 0; s < T; ++s)
        for (int e = 0; e < E; ++e) nets.edges[i](s, e) = t.values[k++];
    }
    // E = V(V-1)/2
    int V = 2;
    while (n_edges(V) < E) ++V;
    nets.n_nodes = V;
  } else if (t.magic == "BPMP" || t.magic == "BPMC") {
    nets.kind = t.magic == "BPMP" ? NetworkKind::Precision : NetworkKind::PartialCorrelation;
    const int N = t.dims[0], T = t.dims[1], V = t.dims[2];
    nets.n_nodes = V;
    nets.matrices.resize(N);
    std::size_t k = 0;
    for (int i = 0; i < N; ++i) {
      nets.matrices[i].assign(T, Eigen::MatrixXd(V, V));
      for (int s = 0; s < T; ++s)
        for (int r = 0; r < V; ++r)
          for (int c = 0; c < V; ++c) nets.matrices[i][s](r, c) = t.values[k++];
    }
  } else {
    throw std::runtime_error("unknown network tensor magic '" + t.magic + "' in " + path);
  }
  return nets;
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << content;
}

}  // namespace bpmm
