#include "ioncav/sectors.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

#include <unsupported/Eigen/MatrixFunctions>

namespace ioncav {

namespace {

struct CavityTerm {
  Mat op;       // cavity factor, atom-identity channel
  double rate;  // population rate
};

struct JumpTerm {
  int from = 0, to = 0;
  Mat op;  // cavity factor
  double rate;
};

struct BlockModel {
  int na = 0, dc = 0;
  std::vector<Mat> h;  // atom-block H_XY, row-major na*na
  std::vector<CavityTerm> cavity;
  std::vector<JumpTerm> jumps;
  double delta_n = 0.0;
  Mat a;  // incoherent mode cavity factor

  const Mat& H(int x, int y) const { return h[x * na + y]; }
};

BlockModel split_blocks(const LindbladGenerator& gen, int atom_dim) {
  const HilbertSpace& s = gen.space();
  if (s.factors() != 2 || s.dims[0] != atom_dim)
    throw std::invalid_argument("sector split: expected [atom, cavity] space");
  BlockModel bm;
  bm.na = atom_dim;
  bm.dc = s.dims[1];
  const Mat& h = gen.hamiltonian().m;
  double hscale = std::max(max_abs(h), 1.0);
  bm.h.resize(bm.na * bm.na);
  for (int x = 0; x < bm.na; ++x)
    for (int y = 0; y < bm.na; ++y)
      bm.h[x * bm.na + y] = h.block(x * bm.dc, y * bm.dc, bm.dc, bm.dc);

  for (const auto& ch : gen.channels()) {
    if (ch.rate == 0.0) continue;
    const Mat& l = ch.op.m;
    double lscale = std::max(max_abs(l), 1e-300);
    // locate nonzero atom blocks
    std::vector<std::pair<int, int>> nz;
    for (int x = 0; x < bm.na; ++x)
      for (int y = 0; y < bm.na; ++y)
        if (max_abs(l.block(x * bm.dc, y * bm.dc, bm.dc, bm.dc)) > 1e-13 * lscale)
          nz.push_back({x, y});
    bool diag_identity = int(nz.size()) == bm.na;
    if (diag_identity) {
      Mat c0 = l.block(0, 0, bm.dc, bm.dc);
      for (auto [x, y] : nz) {
        if (x != y || max_abs(l.block(x * bm.dc, y * bm.dc, bm.dc, bm.dc) - c0) > 1e-13 * lscale)
          diag_identity = false;
      }
      if (diag_identity) {
        bm.cavity.push_back({c0, ch.rate});
        continue;
      }
    }
    if (nz.size() == 1) {
      auto [to, from] = nz[0];
      bm.jumps.push_back({from, to, l.block(to * bm.dc, from * bm.dc, bm.dc, bm.dc), ch.rate});
      continue;
    }
    throw std::invalid_argument("sector split: channel has unsupported atom structure");
  }

  bm.delta_n = gen.incoherent_rate();
  if (bm.delta_n > 0) {
    const Mat& am = gen.incoherent_mode().m;
    Mat a0 = am.block(0, 0, bm.dc, bm.dc);
    for (int x = 0; x < bm.na; ++x)
      for (int y = 0; y < bm.na; ++y) {
        Mat blk = am.block(x * bm.dc, y * bm.dc, bm.dc, bm.dc);
        if (x == y ? max_abs(blk - a0) > 1e-12 : max_abs(blk) > 1e-12)
          throw std::invalid_argument("sector split: incoherent mode must be atom-identity");
      }
    bm.a = a0;
  }

  // Sector structure relies on S never being coupled coherently.
  (void)hscale;
  return bm;
}

// Superoperator over a list of atom-index blocks, column-major vec inside
// each block; optional trailing accumulator row.
class BlockSuperOp {
 public:
  BlockSuperOp(int dc, std::vector<std::pair<int, int>> blocks, bool accumulator)
      : dc_(dc), blocks_(std::move(blocks)), acc_(accumulator) {
    n_ = int(blocks_.size()) * dc_ * dc_ + (acc_ ? 1 : 0);
    m_ = Mat::Zero(n_, n_);
    for (int i = 0; i < int(blocks_.size()); ++i) idx_[blocks_[i]] = i;
  }

  bool has_block(int x, int y) const { return idx_.count({x, y}) > 0; }
  int offset(int x, int y) const { return idx_.at({x, y}) * dc_ * dc_; }
  int size() const { return n_; }

  /// target <- target + w * A * source * B  (A, B cavity-sized)
  void add_sandwich(std::pair<int, int> src, std::pair<int, int> dst, const Mat& A,
                    const Mat& B, Cx w) {
    int o_s = offset(src.first, src.second), o_d = offset(dst.first, dst.second);
    // vec(A rho B) = (B^T kron A) vec(rho)
    for (int bc = 0; bc < dc_; ++bc)
      for (int br = 0; br < dc_; ++br) {
        Cx bv = B(br, bc);
        if (bv == Cx(0.0)) continue;
        m_.block(o_d + bc * dc_, o_s + br * dc_, dc_, dc_) += (w * bv) * A;
      }
  }
  void add_left(std::pair<int, int> src, std::pair<int, int> dst, const Mat& A, Cx w) {
    int o_s = offset(src.first, src.second), o_d = offset(dst.first, dst.second);
    for (int c = 0; c < dc_; ++c)
      m_.block(o_d + c * dc_, o_s + c * dc_, dc_, dc_) += w * A;
  }
  void add_right(std::pair<int, int> src, std::pair<int, int> dst, const Mat& B, Cx w) {
    int o_s = offset(src.first, src.second), o_d = offset(dst.first, dst.second);
    for (int bc = 0; bc < dc_; ++bc)
      for (int br = 0; br < dc_; ++br) {
        Cx bv = B(br, bc);
        if (bv == Cx(0.0)) continue;
        m_.block(o_d + bc * dc_, o_s + br * dc_, dc_, dc_) +=
            (w * bv) * Mat::Identity(dc_, dc_);
      }
  }
  /// accumulator' += w * Tr(M * rho_src)
  void add_trace_feed(std::pair<int, int> src, const Mat& M, double w) {
    int o_s = offset(src.first, src.second);
    // column-major: vec element (i*dc + j) holds rho(j, i), picking up M(i, j)
    for (int i = 0; i < dc_; ++i)
      for (int j = 0; j < dc_; ++j) m_(n_ - 1, o_s + i * dc_ + j) += w * M(i, j);
  }

  /// Apply the cavity-local dissipators (cavity channels + incoherent term)
  /// to every block.
  void add_cavity_local(const BlockModel& bm) {
    Mat id = Mat::Identity(dc_, dc_);
    for (const auto& blk : blocks_) {
      for (const auto& cv : bm.cavity) {
        Mat cdagc = cv.op.adjoint() * cv.op;
        add_sandwich(blk, blk, cv.op, cv.op.adjoint(), cv.rate);
        add_left(blk, blk, cdagc, -0.5 * cv.rate);
        add_right(blk, blk, cdagc, -0.5 * cv.rate);
      }
      if (bm.delta_n > 0) {
        Mat nsum = bm.a.adjoint() * bm.a + bm.a * bm.a.adjoint();
        add_sandwich(blk, blk, bm.a, bm.a.adjoint(), 2.0 * bm.delta_n);
        add_sandwich(blk, blk, bm.a.adjoint(), bm.a, 2.0 * bm.delta_n);
        add_left(blk, blk, nsum, -bm.delta_n);
        add_right(blk, blk, nsum, -bm.delta_n);
      }
    }
    (void)id;
  }

  CVec propagate(const CVec& v0, double T) const {
    Mat e = (m_ * T).exp();
    return e * v0;
  }

  const Mat& matrix() const { return m_; }

 private:
  int dc_, n_;
  std::vector<std::pair<int, int>> blocks_;
  std::map<std::pair<int, int>, int> idx_;
  bool acc_;
  Mat m_;
};

std::vector<int> excited_set(const BlockModel& bm, int level_S, int level_D) {
  std::vector<int> e{level_D};
  bool grew = true;
  while (grew) {
    grew = false;
    for (int x : e)
      for (int y = 0; y < bm.na; ++y) {
        if (y == level_S || std::count(e.begin(), e.end(), y)) continue;
        if (max_abs(bm.H(x, y)) > 0 || max_abs(bm.H(y, x)) > 0) {
          e.push_back(y);
          grew = true;
          break;
        }
      }
  }
  std::sort(e.begin(), e.end());
  // S must be coherently decoupled from the excited manifold
  for (int x : e)
    if (max_abs(bm.H(level_S, x)) > 0 || max_abs(bm.H(x, level_S)) > 0)
      throw std::invalid_argument("sector split: S couples coherently to excited manifold");
  for (const auto& j : bm.jumps)
    if (j.from == level_S)
      throw std::invalid_argument("sector split: jumps out of S unsupported");
  return e;
}

}  // namespace

SectorPropagator build_sector_propagator(const LindbladGenerator& gen, int atom_dim,
                                         int level_S, int level_D) {
  BlockModel bm = split_blocks(gen, atom_dim);
  std::vector<int> exc = excited_set(bm, level_S, level_D);
  const int dc = bm.dc;

  // --- S-row coherence sector: blocks (S, X), X in exc ---
  std::vector<std::pair<int, int>> cblocks;
  for (int x : exc) cblocks.push_back({level_S, x});
  BlockSuperOp sc(dc, cblocks, false);
  for (int x : exc) {
    sc.add_left({level_S, x}, {level_S, x}, bm.H(level_S, level_S), -kI);
    for (int y : exc)
      if (max_abs(bm.H(y, x)) > 0) sc.add_right({level_S, y}, {level_S, x}, bm.H(y, x), kI);
  }
  for (const auto& j : bm.jumps) {
    if (!std::count(exc.begin(), exc.end(), j.from)) continue;
    Mat cdagc = j.op.adjoint() * j.op;
    sc.add_right({level_S, j.from}, {level_S, j.from}, cdagc, -0.5 * j.rate);
  }
  sc.add_cavity_local(bm);

  // --- excited-population sector: blocks (X, Y), X,Y in exc; S-feed row ---
  std::vector<std::pair<int, int>> eblocks;
  for (int x : exc)
    for (int y : exc) eblocks.push_back({x, y});
  BlockSuperOp se(dc, eblocks, true);
  for (int x : exc)
    for (int y : exc) {
      for (int w : exc) {
        if (max_abs(bm.H(x, w)) > 0) se.add_left({w, y}, {x, y}, bm.H(x, w), -kI);
        if (max_abs(bm.H(w, y)) > 0) se.add_right({x, w}, {x, y}, bm.H(w, y), kI);
      }
    }
  for (const auto& j : bm.jumps) {
    if (!std::count(exc.begin(), exc.end(), j.from)) continue;
    Mat cdagc = j.op.adjoint() * j.op;
    for (int y : exc) {
      se.add_left({j.from, y}, {j.from, y}, cdagc, -0.5 * j.rate);
      se.add_right({y, j.from}, {y, j.from}, cdagc, -0.5 * j.rate);
    }
    if (std::count(exc.begin(), exc.end(), j.to))
      se.add_sandwich({j.from, j.from}, {j.to, j.to}, j.op, j.op.adjoint(), j.rate);
    else if (j.to == level_S)
      se.add_trace_feed({j.from, j.from}, (j.op.adjoint() * j.op).eval(), j.rate);
  }
  se.add_cavity_local(bm);

  SectorPropagator sp;
  sp.coh = sc.matrix();
  sp.exc = se.matrix();
  sp.dc = dc;
  sp.off_sd = sc.offset(level_S, level_D);
  sp.off_dd = se.offset(level_D, level_D);
  return sp;
}

RamseyTraces SectorPropagator::propagate(double T) const {
  CVec v0 = CVec::Zero(coh.rows());
  v0(off_sd) = Cx(0.0, 0.5);  // rho_SD(0) = i/2 |0><0|
  CVec vT = (coh * T).exp() * v0;

  CVec w0 = CVec::Zero(exc.rows());
  w0(off_dd) = 0.5;  // rho_DD(0) = 1/2 |0><0|
  CVec wT = (exc * T).exp() * w0;

  RamseyTraces tr;
  for (int n = 0; n < dc; ++n) tr.z += vT(off_sd + n * dc + n);
  for (int n = 0; n < dc; ++n) tr.t_DD += wT(off_dd + n * dc + n).real();
  tr.t_SS = 0.5 + wT(exc.rows() - 1).real();
  return tr;
}

RamseyTraces ramsey_traces(const LindbladGenerator& gen, int atom_dim, int level_S,
                           int level_D, double T) {
  return build_sector_propagator(gen, atom_dim, level_S, level_D).propagate(T);
}

double ramsey_probability(const RamseyTraces& tr, double phi_pi) {
  double phi = kTwoPi * 0.5 * phi_pi;
  Cx rot(std::cos(phi), std::sin(phi));
  return 0.5 * (tr.t_SS + tr.t_DD) + (rot * tr.z).imag();
}

InteractionState interaction_state(const LindbladGenerator& gen, int atom_dim, int level_S,
                                   int level_D, double T) {
  BlockModel bm = split_blocks(gen, atom_dim);
  std::vector<int> exc = excited_set(bm, level_S, level_D);
  const int dc = bm.dc;

  std::vector<std::pair<int, int>> blocks;
  for (int x : exc)
    for (int y : exc) blocks.push_back({x, y});
  for (int z = 0; z < bm.na; ++z)
    if (!std::count(exc.begin(), exc.end(), z)) blocks.push_back({z, z});
  BlockSuperOp sp(dc, blocks, false);

  for (auto [x, y] : blocks) {
    // coherent part: within exc it mixes blocks, elsewhere only the local
    // cavity Hamiltonian acts
    bool xe = std::count(exc.begin(), exc.end(), x) > 0;
    if (xe) {
      for (int w : exc) {
        if (max_abs(bm.H(x, w)) > 0) sp.add_left({w, y}, {x, y}, bm.H(x, w), -kI);
        if (max_abs(bm.H(w, y)) > 0) sp.add_right({x, w}, {x, y}, bm.H(w, y), kI);
      }
    } else {
      sp.add_left({x, y}, {x, y}, bm.H(x, x), -kI);
      sp.add_right({x, y}, {x, y}, bm.H(y, y), kI);
    }
  }
  for (const auto& j : bm.jumps) {
    Mat cdagc = j.op.adjoint() * j.op;
    for (auto [x, y] : blocks) {
      if (x == j.from) sp.add_left({x, y}, {x, y}, cdagc, -0.5 * j.rate);
      if (y == j.from) sp.add_right({x, y}, {x, y}, cdagc, -0.5 * j.rate);
    }
    if (sp.has_block(j.to, j.to))
      sp.add_sandwich({j.from, j.from}, {j.to, j.to}, j.op, j.op.adjoint(), j.rate);
  }
  sp.add_cavity_local(bm);

  CVec v0 = CVec::Zero(sp.size());
  v0(sp.offset(level_D, level_D)) = 0.5;
  v0(sp.offset(level_S, level_S)) = 0.5;
  CVec vT = sp.propagate(v0, T);

  InteractionState st;
  st.cavity_diag = RVec::Zero(dc);
  st.atom_pop = RVec::Zero(bm.na);
  for (auto [x, y] : blocks) {
    if (x != y) continue;
    int o = sp.offset(x, y);
    for (int n = 0; n < dc; ++n) {
      double pn = vT(o + n * dc + n).real();
      st.cavity_diag(n) += pn;
      st.atom_pop(x) += pn;
    }
  }
  return st;
}

}  // namespace ioncav
