#include "fast_objective.hpp"

#include <algorithm>
#include <numeric>

namespace adqc::detail {

namespace {

constexpr std::size_t kCheckpointBudget = std::size_t{64} << 20;  // bytes per evaluator

std::size_t pick_stride(std::size_t n, std::size_t alphabet, std::size_t kinds, std::size_t min_stride) {
  const std::size_t per_checkpoint = alphabet * kinds * sizeof(std::uint32_t);
  const std::size_t checkpoints = std::max<std::size_t>(1, kCheckpointBudget / per_checkpoint);
  return std::max(min_stride, (n + checkpoints - 1) / checkpoints);
}

int correction_alphabet(const SchemeSpec& s) { return s.kind == SchemeKind::ADQC ? 1 << s.correction() : 1; }

// Stable counting sort of a key-sorted order by correction index; group_begin
// gets K + 1 offsets.
std::vector<std::uint32_t> grouped_order(const std::vector<int>& group, const std::vector<std::uint32_t>& by_key,
                                         int groups, std::vector<std::size_t>& group_begin) {
  group_begin.assign(static_cast<std::size_t>(groups) + 1, 0);
  for (int g : group) ++group_begin[static_cast<std::size_t>(g) + 1];
  std::partial_sum(group_begin.begin(), group_begin.end(), group_begin.begin());
  auto next = group_begin;
  std::vector<std::uint32_t> order(by_key.size());
  for (auto i : by_key) order[next[static_cast<std::size_t>(group[i])]++] = i;
  return order;
}

template <class T>
std::vector<T> permuted(const std::vector<T>& v, const std::vector<std::uint32_t>& order) {
  std::vector<T> out(order.size());
  for (std::size_t i = 0; i < order.size(); ++i) out[i] = v[order[i]];
  return out;
}

std::vector<std::uint16_t> as_labels(const std::vector<int>& v) {
  return {v.begin(), v.end()};
}

// First index in [lo, hi) whose key is >= t, i.e. the start of a quantizer cell.
std::size_t cell_start(const std::vector<double>& keys, std::size_t lo, std::size_t hi, double t) {
  return static_cast<std::size_t>(std::lower_bound(keys.begin() + static_cast<std::ptrdiff_t>(lo),
                                                   keys.begin() + static_cast<std::ptrdiff_t>(hi), t) -
                                  keys.begin());
}

// Calls piece(lo, hi, value) for each maximal run of [lo, hi) on which
// value_of(key) is constant; value_of must be non-decreasing on the range.
template <class F, class G>
void for_each_run(const std::vector<double>& keys, std::size_t lo, std::size_t hi, F value_of, G piece) {
  while (lo < hi) {
    const auto v = value_of(keys[lo]);
    const auto end = std::partition_point(keys.begin() + static_cast<std::ptrdiff_t>(lo),
                                          keys.begin() + static_cast<std::ptrdiff_t>(hi),
                                          [&](double k) { return value_of(k) <= v; });
    const auto next = static_cast<std::size_t>(end - keys.begin());
    piece(lo, next, v);
    lo = next;
  }
}

// Adds the label counts of [lo, hi) as column `col` (labels index rows) or as
// row `row` (labels index columns).
void add_column(const RangeCounts& rc, std::size_t lo, std::size_t hi, JointPmf& p, std::size_t col,
                std::vector<std::uint64_t>& scratch) {
  std::fill(scratch.begin(), scratch.begin() + static_cast<std::ptrdiff_t>(p.levels()), 0);
  rc.add_range(lo, hi, scratch.data());
  for (std::size_t v = 0; v < p.levels(); ++v)
    if (scratch[v] != 0) p.add(v, col, scratch[v]);
}

void add_row(const RangeCounts& rc, std::size_t lo, std::size_t hi, JointPmf& p, std::size_t row,
             std::vector<std::uint64_t>& scratch) {
  std::fill(scratch.begin(), scratch.begin() + static_cast<std::ptrdiff_t>(p.levels()), 0);
  rc.add_range(lo, hi, scratch.data());
  for (std::size_t v = 0; v < p.levels(); ++v)
    if (scratch[v] != 0) p.add(row, v, scratch[v]);
}

}  // namespace

RangeCounts::RangeCounts(std::vector<std::uint16_t> labels, std::size_t alphabet, std::size_t stride)
    : labels_(std::move(labels)), alphabet_(alphabet), stride_(stride) {
  const std::size_t blocks = labels_.size() / stride_ + 1;
  checkpoints_.assign(blocks * alphabet_, 0);
  std::vector<std::uint32_t> running(alphabet_, 0);
  for (std::size_t block = 0; block < blocks; ++block) {
    std::copy(running.begin(), running.end(), checkpoints_.begin() + static_cast<std::ptrdiff_t>(block * alphabet_));
    const std::size_t end = std::min(labels_.size(), (block + 1) * stride_);
    for (std::size_t i = block * stride_; i < end; ++i) ++running[labels_[i]];
  }
}

void RangeCounts::add_range(std::size_t lo, std::size_t hi, std::uint64_t* out) const {
  if (hi <= lo) return;
  if (hi - lo <= 2 * stride_) {
    for (std::size_t i = lo; i < hi; ++i) ++out[labels_[i]];
    return;
  }
  const std::size_t lb = lo / stride_;
  const std::size_t hb = hi / stride_;
  const std::uint32_t* upper = checkpoints_.data() + hb * alphabet_;
  const std::uint32_t* lower = checkpoints_.data() + lb * alphabet_;
  for (std::size_t v = 0; v < alphabet_; ++v) out[v] += upper[v] - lower[v];
  for (std::size_t i = hb * stride_; i < hi; ++i) ++out[labels_[i]];
  for (std::size_t i = lb * stride_; i < lo; ++i) --out[labels_[i]];
}

SortedOrders::SortedOrders(const Dataset& ds) {
  std::vector<std::pair<double, std::uint32_t>> keyed(ds.size());
  const auto sorted_by = [&](double TriSample::*coord) {
    for (std::size_t i = 0; i < ds.size(); ++i) keyed[i] = {ds[i].*coord, static_cast<std::uint32_t>(i)};
    std::sort(keyed.begin(), keyed.end());
    std::vector<std::uint32_t> o(ds.size());
    for (std::size_t i = 0; i < ds.size(); ++i) o[i] = keyed[i].second;
    return o;
  };
  by_x = sorted_by(&TriSample::x);
  by_y = sorted_by(&TriSample::y);
  by_z = sorted_by(&TriSample::z);
  x_sorted.reserve(ds.size());
  for (auto i : by_x) x_sorted.push_back(ds[i]);
}

bool fast_path_supported(const SchemeSpec& scheme) {
  if (scheme.kind == SchemeKind::GB || scheme.bits > 8) return false;
  return scheme.kind == SchemeKind::NEC || scheme.correction() <= 4;
}

EveObjective::EveObjective(const SchemeSpec& scheme, const Dataset& ds, const SortedOrders& sorted,
                           const Quantizer& qa, const Quantizer& qb, const AdqcOptions& opts)
    : scheme_(scheme),
      opts_(opts),
      levels_(qa.levels()),
      total_(ds.size()),
      ab_(levels_),
      ae_(levels_),
      be_(levels_),
      ae_raw_(levels_),
      be_raw_(levels_),
      scratch_(levels_, 0) {
  const bool adqc = scheme.kind == SchemeKind::ADQC;
  const std::size_t n = ds.size();
  std::vector<int> a(n), b(n), group(n, 0);
  std::vector<double> z(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& s = ds[i];
    const auto o = adqc ? adqc_step(qa, qb, qb, s, scheme.correction(), opts) : nec_step(qa, qb, qb, s);
    a[i] = o.sym_a;
    b[i] = o.sym_b;
    if (o.xi) group[i] = o.xi->xi - 1;
    z[i] = s.z;
    ab_.add(static_cast<std::size_t>(a[i]), static_cast<std::size_t>(b[i]));
  }
  const auto order = grouped_order(group, sorted.by_z, correction_alphabet(scheme), group_begin_);
  keys_ = permuted(z, order);
  const std::size_t stride = pick_stride(n, levels_, 2, 8);
  a_ = RangeCounts(as_labels(permuted(a, order)), levels_, stride);
  b_ = RangeCounts(as_labels(permuted(b, order)), levels_, stride);
}

double EveObjective::operator()(const Quantizer& qe) {
  ae_.clear();
  be_.clear();
  ae_raw_.clear();
  be_raw_.clear();
  const bool adqc = scheme_.kind == SchemeKind::ADQC;
  auto& ae_plain = adqc ? ae_raw_ : ae_;
  auto& be_plain = adqc ? be_raw_ : be_;
  const auto bounds = qe.boundaries();
  for (std::size_t g = 0; g + 1 < group_begin_.size(); ++g) {
    const std::size_t g_end = group_begin_[g + 1];
    const CorrectionIndex xi{static_cast<int>(g) + 1, scheme_.correction()};
    std::size_t lo = group_begin_[g];
    for (std::size_t m = 0; m < levels_; ++m) {
      const std::size_t hi = m + 1 == levels_ ? g_end : cell_start(keys_, lo, g_end, bounds[m + 1]);
      if (hi > lo) {
        add_column(a_, lo, hi, ae_plain, m, scratch_);
        add_column(b_, lo, hi, be_plain, m, scratch_);
        if (adqc) {
          for_each_run(
              keys_, lo, hi, [&](double v) { return corrected_symbol(qe, v, xi, opts_); },
              [&](std::size_t p, std::size_t q, int e) {
                add_column(a_, p, q, ae_, static_cast<std::size_t>(e), scratch_);
                add_column(b_, p, q, be_, static_cast<std::size_t>(e), scratch_);
              });
        }
      }
      lo = hi;
    }
  }
  return csk_lower(ab_, ae_, be_, ae_raw_, be_raw_, scheme_, total_).c_sk_low;
}

BobObjective::BobObjective(const SchemeSpec& scheme, const Dataset& ds, const SortedOrders& sorted,
                           const Quantizer& qa, const Quantizer& qe, const AdqcOptions& opts)
    : scheme_(scheme),
      opts_(opts),
      levels_(qa.levels()),
      total_(ds.size()),
      ab_(levels_),
      ae_(levels_),
      be_(levels_),
      ae_raw_(levels_),
      be_raw_(levels_),
      scratch_(levels_, 0) {
  const bool adqc = scheme.kind == SchemeKind::ADQC;
  const std::size_t n = ds.size();
  std::vector<int> a(n), e(n), e_raw(n), group(n, 0);
  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& s = ds[i];
    const auto o = adqc ? adqc_step(qa, qe, qe, s, scheme.correction(), opts) : nec_step(qa, qe, qe, s);
    a[i] = o.sym_a;
    e[i] = o.sym_e;
    e_raw[i] = o.sym_e_raw;
    if (o.xi) group[i] = o.xi->xi - 1;
    y[i] = s.y;
    ae_.add(static_cast<std::size_t>(a[i]), static_cast<std::size_t>(e[i]));
    ae_raw_.add(static_cast<std::size_t>(a[i]), static_cast<std::size_t>(e_raw[i]));
  }
  const auto order = grouped_order(group, sorted.by_y, correction_alphabet(scheme), group_begin_);
  keys_ = permuted(y, order);
  const std::size_t stride = pick_stride(n, levels_, 3, 8);
  a_ = RangeCounts(as_labels(permuted(a, order)), levels_, stride);
  e_ = RangeCounts(as_labels(permuted(e, order)), levels_, stride);
  if (adqc) e_raw_ = RangeCounts(as_labels(permuted(e_raw, order)), levels_, stride);
}

double BobObjective::operator()(const Quantizer& qb) {
  ab_.clear();
  be_.clear();
  be_raw_.clear();
  const bool adqc = scheme_.kind == SchemeKind::ADQC;
  const auto bounds = qb.boundaries();
  for (std::size_t g = 0; g + 1 < group_begin_.size(); ++g) {
    const std::size_t g_end = group_begin_[g + 1];
    const CorrectionIndex xi{static_cast<int>(g) + 1, scheme_.correction()};
    std::size_t lo = group_begin_[g];
    for (std::size_t m = 0; m < levels_; ++m) {
      const std::size_t hi = m + 1 == levels_ ? g_end : cell_start(keys_, lo, g_end, bounds[m + 1]);
      if (hi > lo) {
        if (adqc) {
          for_each_run(
              keys_, lo, hi, [&](double v) { return corrected_symbol(qb, v, xi, opts_); },
              [&](std::size_t p, std::size_t q, int b) {
                const auto row = static_cast<std::size_t>(b);
                add_column(a_, p, q, ab_, row, scratch_);
                add_row(e_, p, q, be_, row, scratch_);
                add_row(e_raw_, p, q, be_raw_, row, scratch_);
              });
        } else {
          add_column(a_, lo, hi, ab_, m, scratch_);
          add_row(e_, lo, hi, be_, m, scratch_);
        }
      }
      lo = hi;
    }
  }
  return csk_lower(ab_, ae_, be_, ae_raw_, be_raw_, scheme_, total_).c_sk_low;
}

AliceObjective::AliceObjective(const SchemeSpec& scheme, const Dataset& ds, const SortedOrders& sorted,
                               const Quantizer& qb, const Quantizer& qe, const AdqcOptions& opts)
    : scheme_(scheme),
      levels_(qb.levels()),
      total_(ds.size()),
      ab_(levels_),
      ae_(levels_),
      be_(levels_),
      ae_raw_(levels_),
      be_raw_(levels_),
      scratch_(levels_ * levels_, 0) {
  const bool adqc = scheme.kind == SchemeKind::ADQC;
  const std::size_t n = ds.size();
  const int groups = correction_alphabet(scheme);
  const auto& samples = sorted.x_sorted;
  keys_.resize(n);
  for (std::size_t i = 0; i < n; ++i) keys_[i] = samples[i].x;

  const std::size_t alphabet = levels_ * levels_;
  const std::size_t kinds = static_cast<std::size_t>(groups) * (adqc ? 2 : 1);
  const std::size_t stride = pick_stride(n, alphabet, kinds, 16);
  std::vector<double> len_b(n), len_e(n);
  std::vector<std::uint16_t> e_raw(n);
  for (std::size_t i = 0; i < n; ++i) {
    len_b[i] = qb.interval_of(samples[i].y).length;
    len_e[i] = qe.interval_of(samples[i].z).length;
    e_raw[i] = static_cast<std::uint16_t>(qe.quantize(samples[i].z));
  }
  std::vector<std::uint16_t> be(n), ber(n);
  for (int g = 0; g < groups; ++g) {
    const CorrectionIndex xi{g + 1, scheme.correction()};
    for (std::size_t i = 0; i < n; ++i) {
      const auto& s = samples[i];
      if (adqc) {
        const auto b = static_cast<std::size_t>(corrected_symbol(qb, s.y, len_b[i], xi, opts));
        const auto e = static_cast<std::size_t>(corrected_symbol(qe, s.z, len_e[i], xi, opts));
        be[i] = static_cast<std::uint16_t>(b * levels_ + e);
        ber[i] = static_cast<std::uint16_t>(b * levels_ + e_raw[i]);
      } else {
        be[i] = static_cast<std::uint16_t>(qb.quantize(s.y) * levels_ + e_raw[i]);
      }
    }
    joint_be_.emplace_back(be, alphabet, stride);
    if (adqc) joint_ber_.emplace_back(ber, alphabet, stride);
  }
}

void AliceObjective::add_piece(std::size_t a, std::size_t lo, std::size_t hi, int xi) {
  const auto fold = [&](const RangeCounts& rc, JointPmf& pa, JointPmf& pb, bool with_ab) {
    std::fill(scratch_.begin(), scratch_.end(), 0);
    rc.add_range(lo, hi, scratch_.data());
    for (std::size_t b = 0; b < levels_; ++b) {
      std::uint64_t row = 0;
      for (std::size_t e = 0; e < levels_; ++e) {
        const auto c = scratch_[b * levels_ + e];
        if (c == 0) continue;
        row += c;
        pa.add(a, e, c);
        pb.add(b, e, c);
      }
      if (with_ab && row != 0) ab_.add(a, b, row);
    }
  };
  const auto g = static_cast<std::size_t>(xi - 1);
  fold(joint_be_[g], ae_, be_, true);
  if (!joint_ber_.empty()) fold(joint_ber_[g], ae_raw_, be_raw_, false);
}

double AliceObjective::operator()(const Quantizer& qa) {
  ab_.clear();
  ae_.clear();
  be_.clear();
  ae_raw_.clear();
  be_raw_.clear();
  const bool adqc = scheme_.kind == SchemeKind::ADQC;
  const auto bounds = qa.boundaries();
  const std::size_t n = keys_.size();
  std::size_t lo = 0;
  for (std::size_t a = 0; a < levels_; ++a) {
    const std::size_t hi = a + 1 == levels_ ? n : cell_start(keys_, lo, n, bounds[a + 1]);
    if (hi > lo) {
      if (adqc) {
        for_each_run(
            keys_, lo, hi, [&](double x) { return encode_correction(qa, x, scheme_.correction()).xi; },
            [&](std::size_t p, std::size_t q, int xi) { add_piece(a, p, q, xi); });
      } else {
        add_piece(a, lo, hi, 1);
      }
    }
    lo = hi;
  }
  return csk_lower(ab_, ae_, be_, ae_raw_, be_raw_, scheme_, total_).c_sk_low;
}

}  // namespace adqc::detail
