#include "paracycle/mesh.hpp"

#include <fstream>
#include <map>
#include <sstream>

#include "paracycle/csv.hpp"

namespace paracycle {

Grid::Grid(std::vector<Vector> coords) : coords_(std::move(coords)) {
  if (coords_.empty() || coords_.size() > 3) {
    throw InvalidGrid("grid must have 1 to 3 dimensions");
  }
  num_points_ = 1;
  for (int d = 0; d < dims(); ++d) {
    const Vector& x = coords_[d];
    if (x.size() < 3) {
      throw InvalidGrid("dimension " + std::to_string(d) + " needs at least 3 points");
    }
    Vector h = x.tail(x.size() - 1) - x.head(x.size() - 1);
    if (!x.allFinite() || (h.array() <= 0.0).any()) {
      throw InvalidGrid("coordinates of dimension " + std::to_string(d) +
                        " are not strictly increasing");
    }
    spacings_.push_back(std::move(h));
    num_points_ *= x.size();
  }
  for (int d = 1; d < 3; ++d) strides_[d] = strides_[d - 1] * size(d - 1);
}

MultiIndex Grid::multi_index(Index p) const {
  MultiIndex ijk{0, 0, 0};
  for (int d = dims() - 1; d >= 0; --d) {
    ijk[d] = p / strides_[d];
    p -= ijk[d] * strides_[d];
  }
  return ijk;
}

Eigen::Vector3d Grid::position(Index p) const {
  const MultiIndex ijk = multi_index(p);
  Eigen::Vector3d x = Eigen::Vector3d::Zero();
  for (int d = 0; d < dims(); ++d) x[d] = coords_[d][ijk[d]];
  return x;
}

GridPtr build_grid(const GridSpec& spec) {
  std::vector<Vector> coords;
  if (!spec.coords.empty()) {
    if (!spec.counts.empty() && spec.counts.size() != spec.coords.size()) {
      throw InvalidGrid("point counts and coordinate arrays disagree on dimension count");
    }
    for (std::size_t d = 0; d < spec.coords.size(); ++d) {
      if (!spec.counts.empty() && spec.counts[d] != spec.coords[d].size()) {
        throw InvalidGrid("dimension " + std::to_string(d) + ": count does not match coordinates");
      }
    }
    coords = spec.coords;
  } else {
    if (spec.extents.size() != spec.counts.size()) {
      throw InvalidGrid("need one extent per dimension");
    }
    for (std::size_t d = 0; d < spec.counts.size(); ++d) {
      if (spec.counts[d] < 3) {
        throw InvalidGrid("dimension " + std::to_string(d) + " needs at least 3 points");
      }
      const auto [lo, hi] = spec.extents[d];
      if (!(hi > lo)) throw InvalidGrid("extent of dimension " + std::to_string(d) + " is empty");
      Vector x(spec.counts[d]);
      const Index n = spec.counts[d];
      for (Index i = 0; i < n; ++i) {
        // Exact endpoints, no accumulated drift.
        x[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
      }
      coords.push_back(std::move(x));
    }
  }
  return std::make_shared<const Grid>(std::move(coords));
}

BoundaryCondition BoundaryCondition::uniform(FaceBc face) {
  BoundaryCondition bc;
  for (int d = 0; d < 3; ++d) bc.set(d, face);
  return bc;
}

BoundaryCondition& BoundaryCondition::set(int dim, int side, FaceBc face) {
  if (dim < 0 || dim > 2 || side < 0 || side > 1) {
    throw InvalidBoundary("boundary face index out of range");
  }
  faces_[dim][side] = face;
  return *this;
}

void BoundaryCondition::validate(int dims) const {
  for (int d = 0; d < dims; ++d) {
    const bool lo = faces_[d][0].kind == BcKind::periodic;
    const bool hi = faces_[d][1].kind == BcKind::periodic;
    if (lo != hi) {
      throw InvalidBoundary("dimension " + std::to_string(d) +
                            ": periodic must be set on both faces or neither");
    }
  }
}

Field::Field(GridPtr grid, int components) : grid_(std::move(grid)) {
  if (!grid_) throw ContractViolation("field needs a grid");
  if (components < 1) throw ContractViolation("field needs at least one component");
  values_ = Matrix::Zero(grid_->num_points(), components);
}

Field::Field(GridPtr grid, Matrix values) : grid_(std::move(grid)), values_(std::move(values)) {
  if (!grid_) throw ContractViolation("field needs a grid");
  if (values_.rows() != grid_->num_points() || values_.cols() < 1) {
    throw ContractViolation("field values do not match grid size");
  }
}

bool Field::same_shape(const Field& other) const {
  return grid_ && other.grid_ && (grid_ == other.grid_ || (grid_->num_points() == other.grid_->num_points() &&
                                                            grid_->dims() == other.grid_->dims())) &&
         components() == other.components();
}

HaloField::HaloField(const Field& interior) : grid_(interior.grid_ptr()) {
  for (int d = 0; d < grid_->dims(); ++d) padded_[d] = grid_->size(d) + 2;
  values_ = Matrix::Zero(padded_[0] * padded_[1] * padded_[2], interior.components());
  const Grid& g = *grid_;
  for (Index p = 0; p < g.num_points(); ++p) {
    const MultiIndex ijk = g.multi_index(p);
    values_.row(offset(ijk[0], ijk[1], ijk[2])) = interior.values().row(p);
  }
}

void fill_ghost(HaloField& halo, const BoundaryCondition& bc) {
  const Grid& g = halo.grid();
  const int nd = g.dims();
  bc.validate(nd);
  // Dimension by dimension; later dimensions sweep over earlier ghosts so
  // edges and corners are filled too.
  for (int d = 0; d < nd; ++d) {
    const Index n = g.size(d);
    std::array<Index, 3> lo{0, 0, 0}, hi{0, 0, 0};
    for (int e = 0; e < nd; ++e) {
      lo[e] = e < d ? -1 : 0;
      hi[e] = e < d ? g.size(e) : g.size(e) - 1;
    }
    lo[d] = hi[d] = 0;
    for (Index k = lo[2]; k <= hi[2]; ++k) {
      for (Index j = lo[1]; j <= hi[1]; ++j) {
        for (Index i = lo[0]; i <= hi[0]; ++i) {
          MultiIndex ghost_lo{i, j, k}, ghost_hi{i, j, k}, first{i, j, k}, last{i, j, k};
          ghost_lo[d] = -1;
          ghost_hi[d] = n;
          first[d] = 0;
          last[d] = n - 1;
          for (int c = 0; c < halo.components(); ++c) {
            const double v_first = halo.at(first, c);
            const double v_last = halo.at(last, c);
            const FaceBc& f_lo = bc.face(d, 0);
            const FaceBc& f_hi = bc.face(d, 1);
            double g_lo = v_first, g_hi = v_last;
            switch (f_lo.kind) {
              case BcKind::dirichlet: g_lo = f_lo.value; break;
              case BcKind::neumann: g_lo = v_first; break;
              case BcKind::periodic: g_lo = v_last; break;
            }
            switch (f_hi.kind) {
              case BcKind::dirichlet: g_hi = f_hi.value; break;
              case BcKind::neumann: g_hi = v_last; break;
              case BcKind::periodic: g_hi = v_first; break;
            }
            halo.at(ghost_lo[0], ghost_lo[1], ghost_lo[2], c) = g_lo;
            halo.at(ghost_hi[0], ghost_hi[1], ghost_hi[2], c) = g_hi;
          }
        }
      }
    }
  }
}

HaloField fill_ghost(const Field& field, const BoundaryCondition& bc) {
  HaloField halo(field);
  fill_ghost(halo, bc);
  return halo;
}

double dual_width(const Grid& grid, const BoundaryCondition& bc, int d, Index i) {
  const Vector& h = grid.spacings(d);
  const Index n = grid.size(d);
  double left = 0.0, right = 0.0;
  if (i > 0) {
    left = h[i - 1];
  } else if (bc.periodic(d)) {
    left = grid.wrap_spacing(d);
  }
  if (i < n - 1) {
    right = h[i];
  } else if (bc.periodic(d)) {
    right = grid.wrap_spacing(d);
  }
  return 0.5 * (left + right);
}

Vector dual_volumes(const Grid& grid, const BoundaryCondition& bc) {
  Vector v(grid.num_points());
  for (Index p = 0; p < grid.num_points(); ++p) {
    const MultiIndex ijk = grid.multi_index(p);
    double vol = 1.0;
    for (int d = 0; d < grid.dims(); ++d) vol *= dual_width(grid, bc, d, ijk[d]);
    v[p] = vol;
  }
  return v;
}

std::vector<char> dirichlet_mask(const Grid& grid, const BoundaryCondition& bc) {
  std::vector<char> mask(grid.num_points(), 0);
  for (Index p = 0; p < grid.num_points(); ++p) {
    const MultiIndex ijk = grid.multi_index(p);
    for (int d = 0; d < grid.dims(); ++d) {
      if ((ijk[d] == 0 && bc.face(d, 0).kind == BcKind::dirichlet) ||
          (ijk[d] == grid.size(d) - 1 && bc.face(d, 1).kind == BcKind::dirichlet)) {
        mask[p] = 1;
      }
    }
  }
  return mask;
}

std::optional<Index> neighbor(const Grid& grid, const BoundaryCondition& bc, Index p, int d,
                              int dir) {
  MultiIndex ijk = grid.multi_index(p);
  const Index n = grid.size(d);
  Index i = ijk[d] + dir;
  if (i < 0 || i >= n) {
    if (!bc.periodic(d)) return std::nullopt;
    i = (i + n) % n;
  }
  ijk[d] = i;
  return grid.linear_index(ijk);
}

void impose_dirichlet(Field& field, const BoundaryCondition& bc) {
  const Grid& g = field.grid();
  for (Index p = 0; p < g.num_points(); ++p) {
    const MultiIndex ijk = g.multi_index(p);
    for (int d = 0; d < g.dims(); ++d) {
      const FaceBc* face = nullptr;
      if (ijk[d] == 0 && bc.face(d, 0).kind == BcKind::dirichlet) face = &bc.face(d, 0);
      else if (ijk[d] == g.size(d) - 1 && bc.face(d, 1).kind == BcKind::dirichlet) face = &bc.face(d, 1);
      if (face) {
        field.values().row(p).setConstant(face->value);
        break;
      }
    }
  }
}

void write_field_csv(const Field& field, const std::string& path, const std::string& coords_path) {
  const Grid& g = field.grid();
  {
    std::ofstream out(path);
    if (!out) throw Error("cannot open " + path + " for writing");
    out << "dim0,dim1,dim2,component,value\n";
    for (Index p = 0; p < g.num_points(); ++p) {
      const MultiIndex ijk = g.multi_index(p);
      for (int c = 0; c < field.components(); ++c) {
        out << ijk[0] << ',' << ijk[1] << ',' << ijk[2] << ',' << c << ','
            << csv::format(field(p, c)) << '\n';
      }
    }
    if (!out) throw Error("write failed: " + path);
  }
  std::ofstream out(coords_path);
  if (!out) throw Error("cannot open " + coords_path + " for writing");
  out << "dim,index,coord\n";
  for (int d = 0; d < g.dims(); ++d) {
    for (Index i = 0; i < g.size(d); ++i) {
      out << d << ',' << i << ',' << csv::format(g.coords(d)[i]) << '\n';
    }
  }
  if (!out) throw Error("write failed: " + coords_path);
}

namespace {

std::vector<std::vector<std::string>> read_rows(const std::string& path,
                                                const std::string& expected_header) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw Error(path + ": empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != expected_header) throw Error(path + ": unexpected header '" + line + "'");
  std::vector<std::vector<std::string>> rows;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    rows.push_back(csv::split_line(line));
  }
  return rows;
}

}  // namespace

Field read_field_csv(const std::string& path, const std::string& coords_path) {
  std::map<int, std::vector<std::pair<Index, double>>> per_dim;
  for (const auto& row : read_rows(coords_path, "dim,index,coord")) {
    if (row.size() != 3) throw Error(coords_path + ": expected 3 columns");
    per_dim[std::stoi(row[0])].emplace_back(std::stol(row[1]), csv::parse_double(row[2]));
  }
  std::vector<Vector> coords;
  for (auto& [d, entries] : per_dim) {
    if (d != static_cast<int>(coords.size())) throw Error(coords_path + ": missing dimension");
    Vector x(static_cast<Index>(entries.size()));
    for (auto [i, v] : entries) {
      if (i < 0 || i >= x.size()) throw Error(coords_path + ": index out of range");
      x[i] = v;
    }
    coords.push_back(std::move(x));
  }
  auto grid = std::make_shared<const Grid>(std::move(coords));

  const auto rows = read_rows(path, "dim0,dim1,dim2,component,value");
  int components = 0;
  for (const auto& row : rows) {
    if (row.size() != 5) throw Error(path + ": expected 5 columns");
    components = std::max(components, std::stoi(row[3]) + 1);
  }
  if (components == 0) throw Error(path + ": no values");
  Field field(grid, components);
  if (static_cast<Index>(rows.size()) != grid->num_points() * components) {
    throw Error(path + ": value count does not match grid");
  }
  for (const auto& row : rows) {
    const MultiIndex ijk{std::stol(row[0]), std::stol(row[1]), std::stol(row[2])};
    for (int d = 0; d < 3; ++d) {
      if (ijk[d] < 0 || ijk[d] >= grid->size(d)) throw Error(path + ": index out of range");
    }
    field(grid->linear_index(ijk), std::stoi(row[3])) = csv::parse_double(row[4]);
  }
  return field;
}

}  // namespace paracycle
