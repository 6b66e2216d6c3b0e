#include <cmath>

#include "qlab/dims.hpp"
#include "qlab/trees.hpp"

namespace qlab::trees {

ChainReport dim_chain_report(const model::HypothesisClass& cls) {
  ChainReport report;
  const LossClass loss = loss_class(cls);
  report.ldim_loss = dims::littlestone_dim(loss.cls).value;
  report.bldim = dims::bandit_littlestone_dim(cls).value;
  report.mcldim = dims::mc_littlestone_dim(cls).value;
  if (report.ldim_loss > report.bldim) {
    throw InternalInvariantError(
        "dim_chain_report: loss-class dimension exceeds bandit dimension");
  }
  report.bound_4klogk =
      4.0 * cls.num_labels * std::log2(static_cast<double>(cls.num_labels)) *
      static_cast<double>(report.mcldim);
  return report;
}

}  // namespace qlab::trees
