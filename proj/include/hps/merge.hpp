// Copyright (c) 2026 the hpsolve authors. All rights reserved.
// SPDX-License-Identifier: Apache-2.0

#ifndef HPSOLVE_MERGE_HPP
#define HPSOLVE_MERGE_HPP

#include <array>
#include <optional>
#include <vector>

#include "hps/layout.hpp"

namespace hps {

/// View of one child entering a merge: its Poincare--Steklov matrix, outgoing
/// data and boundary-section layouts, rows/cols in the child's canonical
/// boundary order (sections stacked in face order).
template <class S>
struct ChildView {
  const Mat<S>* T = nullptr;
  const Vec<S>* h = nullptr;
  const std::vector<PanelLayout>* sections = nullptr;
  int node_id = -1;
};

/// Blockwise merge system in the stacked section order of the four/eight
/// child exterior sections and the interface sections; mirrors the printed
/// block structure, used by tests and the plain Schur path.
template <class S>
struct MergeBlocks {
  Mat<S> A, B, C, D;
  Vec<S> h_ext, h_int;
  int n_side = 0;                 // points per interface section (uniform)
  std::vector<int> int_offsets;   // interface section offsets in g_int
};

template <class S>
struct SchurOutput {
  Mat<S> T, S_mat;
  Vec<S> h, gtilde;
};

/// Stacked-order assemblers (uniform children only).
MergeBlocks<Real> assemble_quad_dtn(const std::vector<ChildView<Real>>& children);
MergeBlocks<Complex> assemble_quad_iti(const std::vector<ChildView<Complex>>& children);
MergeBlocks<Real> assemble_oct_dtn(const std::vector<ChildView<Real>>& children);

/// Plain dense Schur elimination of the interface unknowns:
/// T = A - B D^-1 C, h = h_ext - B D^-1 h_int, S = -D^-1 C, gtilde = -D^-1 h_int.
template <class S>
SchurOutput<S> schur_merge(const MergeBlocks<S>& blocks);

/// Structured inverse of the ItI merge matrix D = I + [[0,D12],[D21,0]] via
/// the Schur complement W = I - D12*D21.
MatC iti_D_inverse(const MatC& d);

/// Per-node merge product retained for the downward pass and source refreshes.
template <class S>
struct MergeArtifact {
  int node_id = -1;
  std::vector<int> child_ids;
  int n_ext = 0, n_int = 0;
  bool iti = false;

  Mat<S> S_mat;    // dense propagation operator (empty in implicit mode)
  Vec<S> gtilde;
  Vec<S> h_int;
  bool implicit = false;  // apply S through the D factorization and child T blocks

  Eigen::PartialPivLU<Mat<S>> Dfac;  // DtN interface factorization
  Mat<S> D12, D21;                   // ItI structured pieces
  Eigen::PartialPivLU<Mat<S>> Wfac;

  struct Block {
    int child;
    int rface, cface;
    int roff, coff;
    bool rext, cext;
    MatR R, E;  // row/column interface transfers; empty = identity
  };
  std::vector<Block> blocks;

  struct FaceMap {
    bool ext = false;
    int offset = 0;
    int src_len = 0, dst_len = 0;
    MatR E;  // interface undo-projection (coarse -> child points); empty = identity
    MatR R;  // child -> interface projection (rows); empty = identity
  };
  std::vector<std::array<FaceMap, 6>> child_maps;
  std::vector<std::array<int, 7>> child_face_off;  // face row offsets per child

  struct HintOwner {
    int child, face, offset;
  };
  std::vector<HintOwner> hint_owner;  // ItI: which child h feeds each slot

  Vec<S> apply_Dinv(const Vec<S>& x) const;
  Mat<S> apply_Dinv(const Mat<S>& x) const;
};

struct MergeOptions {
  bool is_root = false;       // skip forming the parent T and h
  bool implicit_S = false;    // do not materialize S (root of large 3D solves)
  bool keep_dfac = false;     // retain the interface factorization for refreshes
};

template <class S>
struct MergeOutput {
  Mat<S> T;
  Vec<S> h;
  std::vector<PanelLayout> sections;  // parent boundary sections
  MergeArtifact<S> art;
};

/// Generic 4-to-1 / 8-to-1 merge with canonical parent-exterior ordering.
/// Handles nonuniform (level-restricted) 3D children by discretizing each
/// interface on the coarser side; equal-depth children reduce to the uniform
/// path exactly. `proj` is required for dim == 3.
template <class S>
MergeOutput<S> merge_node(int dim, Variant variant, const std::vector<ChildView<S>>& children,
                          const FaceProjection* proj, const MergeOptions& opts);

/// C * g_ext for an implicit artifact, using the stored child T blocks.
template <class S>
Vec<S> artifact_apply_C(const MergeArtifact<S>& art, const std::vector<ChildView<S>>& children,
                        const Vec<S>& g_ext);

/// Upward source sweep for new child outgoing data: gtilde = -D^-1 h_int and,
/// when requested, h = h_ext - B D^-1 h_int applied from the child T blocks.
template <class S>
void artifact_source_pass(const MergeArtifact<S>& art, const std::vector<ChildView<S>>& children,
                          Vec<S>& gtilde_out, Vec<S>* h_out);

/// Structural sizes (no matrices): boundary layout of one section, interface
/// unknown count of a merge, and total boundary size of a node.
PanelLayout node_section_layout(const DiscretizationTree& tree, int node_id, int face);
int merge_interior_size(const DiscretizationTree& tree, int node_id, bool iti_doubled = false);
int node_boundary_size(const DiscretizationTree& tree, int node_id);

}  // namespace hps

#endif
