#pragma once

#include <algorithm>
#include <cstddef>
#include <ostream>
#include <string>
#include <vector>

#include "capbandit/domain.hpp"
#include "capbandit/error.hpp"

namespace capbandit {

/// Virtual queues Q_a that grow when agent a is assigned more than its
/// long-run share alpha_a and drain otherwise. Unconstrained agents keep a
/// zero queue forever.
class QueueBank {
 public:
  QueueBank(CapacityProfile profile, double eta = 0.5)
      : profile_(std::move(profile)), q_(profile_.size(), 0.0), eta_(eta) {
    if (!(eta >= 0.0)) throw Error(ErrorKind::ValidationError, "eta must be >= 0");
  }

  QueueBank(CapacityProfile profile, double eta, std::vector<double> q)
      : QueueBank(std::move(profile), eta) {
    if (q.size() != q_.size())
      throw Error(ErrorKind::DimensionMismatch, "queue length");
    for (std::size_t a = 0; a < q.size(); ++a) {
      if (!(q[a] >= 0.0)) throw Error(ErrorKind::RangeViolation, "negative queue");
      q_[a] = profile_.is_free(a) ? 0.0 : q[a];
    }
  }

  const std::vector<double>& values() const { return q_; }
  double operator[](std::size_t a) const { return q_[a]; }
  double eta() const { return eta_; }
  const CapacityProfile& profile() const { return profile_; }
  std::size_t size() const { return q_.size(); }

  /// Q_a <- max(Q_a + 1{a = selected} - alpha_a, 0) for constrained a.
  void step(std::size_t selected) {
    if (selected >= q_.size())
      throw Error(ErrorKind::InvalidAgent, "agent " + std::to_string(selected + 1));
    for (std::size_t a = 0; a < q_.size(); ++a) {
      if (profile_.is_free(a)) continue;
      const double arrival = a == selected ? 1.0 : 0.0;
      q_[a] = std::max(q_[a] + arrival - profile_.alphas[a], 0.0);
    }
  }

  /// Q_a <- max(Q_a + N_a - B alpha_a, 0) after a batch of size B.
  void batch_step(const std::vector<int>& counts, int batch_size) {
    if (counts.size() != q_.size())
      throw Error(ErrorKind::CountMismatch, "count vector length");
    long total = 0;
    for (int c : counts) {
      if (c < 0) throw Error(ErrorKind::CountMismatch, "negative count");
      total += c;
    }
    if (total != batch_size)
      throw Error(ErrorKind::CountMismatch,
                  "counts sum to " + std::to_string(total) + ", batch size " +
                      std::to_string(batch_size));
    for (std::size_t a = 0; a < q_.size(); ++a) {
      if (profile_.is_free(a)) continue;
      q_[a] = std::max(q_[a] + counts[a] - batch_size * profile_.alphas[a], 0.0);
    }
  }

  /// eta * Q_a (zero for unconstrained agents).
  std::vector<double> penalties() const {
    std::vector<double> p(q_.size());
    for (std::size_t a = 0; a < q_.size(); ++a) p[a] = eta_ * q_[a];
    return p;
  }

 private:
  CapacityProfile profile_;
  std::vector<double> q_;
  double eta_;
};

/// Queue snapshots recorded at round boundaries.
class QueueTrajectory {
 public:
  void record(std::size_t t, const QueueBank& qb) {
    rows_.push_back({t, qb.values()});
  }
  std::size_t size() const { return rows_.size(); }

  /// CSV `t,q_1,...,q_A`.
  void write_csv(std::ostream& out) const {
    const std::size_t agents = rows_.empty() ? 0 : rows_.front().q.size();
    out << 't';
    for (std::size_t a = 0; a < agents; ++a) out << ",q_" << a + 1;
    out << '\n';
    for (const auto& row : rows_) {
      out << row.t;
      for (double v : row.q) out << ',' << detail::format_double(v);
      out << '\n';
    }
  }

 private:
  struct Row {
    std::size_t t;
    std::vector<double> q;
  };
  std::vector<Row> rows_;
};

}  // namespace capbandit
