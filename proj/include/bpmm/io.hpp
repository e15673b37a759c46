#ifndef BPMM_IO_HPP
#define BPMM_IO_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "bpmm/types.hpp"

namespace bpmm {

// File formats
// ------------
// Binary panel ("BPMM"): 32-byte header = magic[4], u32 N, u32 V, u32 T,
// u64 reserved, 8 zero pad bytes; then N*V*T little-endian float64 values in
// (subject, node, scan) order.
//
// CSV panel: a manifest text file with lines "subject_id,relative_path"; each
// referenced CSV holds one subject, rows = nodes, columns = scans.
//
// Covariates: CSV with header, first column subject id, remaining columns
// numeric.

/// Loads and validates a panel. data_path may be a binary tensor or a CSV
/// manifest (decided by the magic bytes). Subtracts the per-subject per-node
/// mean when demean is set.
PanelDataset load_panel(const std::string& data_path, const std::string& covariate_path,
                        bool demean = true);

void save_panel_binary(const PanelDataset& panel, const std::string& data_path,
                       const std::string& covariate_path);

void save_panel_csv(const PanelDataset& panel, const std::string& manifest_path,
                    const std::string& covariate_path);

/// Generic dense float64 tensor container used for network/label artifacts.
/// Header: magic[4], u32 rank, u32 dims[4] (unused trailing dims = 1),
/// u64 reserved; then row-major float64 payload.
struct Tensor {
  std::string magic = "BPMT";
  std::vector<int> dims;
  std::vector<double> values;

  std::int64_t size() const {
    std::int64_t s = 1;
    for (int d : dims) s *= d;
    return s;
  }
};

void save_tensor(const Tensor& t, const std::string& path);
Tensor load_tensor(const std::string& path, const std::string& expect_magic = "");

void save_network_set(const DynamicNetworkSet& nets, const std::string& path);
DynamicNetworkSet load_network_set(const std::string& path);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

}  // namespace bpmm

#endif
