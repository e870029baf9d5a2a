#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <span>
#include <utility>

#include "gra/rng.hpp"
#include "gra/types.hpp"

namespace gra {

/// Log-distance path loss with log-normal shadowing.
struct PathLossModel {
  double pl0 = 40.0;  // dB at d0
  double d0 = 1.0;    // m
  double exponent = 3.0;
  double shadowing_sigma = 4.0;  // dB

  friend bool operator==(const PathLossModel&, const PathLossModel&) = default;
};

struct LinkBudget {
  double tx_gain = 20.0;      // dBm, transmit power plus antenna gain
  double noise_floor = -90.0; // dBm

  friend bool operator==(const LinkBudget&, const LinkBudget&) = default;
};

/// Radio time the GC has for one aggregation (or distribution) phase.
struct D2dSlotBudget {
  double slot_duration = 0.040;   // s
  double packet_airtime = 0.0008; // s per attempt

  friend bool operator==(const D2dSlotBudget&, const D2dSlotBudget&) = default;
};

struct CsiRecord {
  double true_loss = 0.0;
  double estimated_loss = 0.0;
  double mae = 0.0;
};

void validate(const PathLossModel& model);
void validate(const LinkBudget& budget);
void validate(const D2dSlotBudget& budget);

double path_loss(const PathLossModel& model, double distance, double shadowing_draw);

double snr(const LinkBudget& budget, double loss);

/// Noncoherent GFSK approximation: BER = 0.5 exp(-snr/2), PER over 8*payload bits.
double packet_error_rate(double snr_db, std::size_t payload);

/// Estimated loss = true loss + Laplace error whose mean absolute value is mae.
CsiRecord estimate_csi(double true_loss, double mae, Rng& rng);

/// Transmission attempts one GM gets within the slot budget.
std::size_t d2d_attempts(const D2dSlotBudget& budget, std::size_t group_size);

/// 1 - per^A with A the per-GM attempts; 0 when the budget starves the group.
double d2d_link_reliability(double per, const D2dSlotBudget& budget, std::size_t group_size);

/// PER averaged over the shadowing distribution at a given distance.
double expected_packet_error_rate(const PathLossModel& model, const LinkBudget& budget,
                                  double distance, std::size_t payload);

/// Reliability averaged over the shadowing distribution at a given distance.
double expected_link_reliability(const PathLossModel& model, const LinkBudget& budget,
                                 const D2dSlotBudget& slot, double distance, std::size_t payload,
                                 std::size_t group_size);

/// Frozen propagation field: one shadowing draw per unordered device pair,
/// derived on demand so no N x N table is stored.
class LinkField {
 public:
  LinkField(PathLossModel model, std::uint64_t seed) : model_(model), hash_(seed) {}

  double shadowing(DeviceId a, DeviceId b) const;
  double true_loss(DeviceId a, const Position& pa, DeviceId b, const Position& pb) const;
  /// Unit-scale Laplace estimation error for a link under a named estimator.
  double estimation_error(DeviceId a, DeviceId b, std::uint64_t estimator) const;

  const PathLossModel& model() const { return model_; }

 private:
  PathLossModel model_;
  LinkHash hash_;
};

/// Pairwise estimated loss (dB) between devices, as seen by whoever runs the
/// clustering. Unknown pairs report +infinity.
class CsiTable {
 public:
  virtual ~CsiTable() = default;
  virtual double estimated_loss(DeviceId a, DeviceId b) const = 0;
};

/// Explicit table, mostly for small hand-built cases.
class MapCsiTable final : public CsiTable {
 public:
  void set(DeviceId a, DeviceId b, double loss);
  double estimated_loss(DeviceId a, DeviceId b) const override;

 private:
  std::map<std::pair<DeviceId, DeviceId>, double> losses_;
};

/// Estimates over a LinkField: true loss plus a frozen Laplace error of scale
/// mae. Positions are read through the span on every query, so mobility is
/// reflected immediately.
class FieldCsiTable final : public CsiTable {
 public:
  FieldCsiTable(const LinkField& field, std::span<const Position> positions, double mae,
                std::uint64_t estimator)
      : field_(&field), positions_(positions), mae_(mae), estimator_(estimator) {}

  double estimated_loss(DeviceId a, DeviceId b) const override;
  double true_loss(DeviceId a, DeviceId b) const;
  double mae() const { return mae_; }

 private:
  const LinkField* field_;
  std::span<const Position> positions_;
  double mae_;
  std::uint64_t estimator_;
};

}  // namespace gra
