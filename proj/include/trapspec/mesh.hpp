#pragma once

#include "trapspec/geometry.hpp"
#include "trapspec/spectrum.hpp"

#include <Eigen/Sparse>

#include <array>
#include <vector>

namespace trapspec {

using SparseMatrix = Eigen::SparseMatrix<double>;

struct Mesh {
    std::vector<Vec2> nodes;
    std::vector<std::array<int, 3>> triangles;  // counterclockwise
    std::vector<char> boundary;                 // per node
    double size = 0.0;                          // longest edge

    std::size_t nodeCount() const { return nodes.size(); }
    std::size_t boundaryNodeCount() const;
    double maxAngle() const;  // radians
    double area() const;
};

/// Coarse triangulation of a convex polygon (the triangle itself, the shorter
/// diagonal of a quadrilateral, or a centroid fan) refined uniformly until
/// the longest edge is at most `meshSize`.
/// Throws MeshError for degenerate triangles or a maximum angle above the cap.
Mesh meshPolygon(const Polygon& polygon, double meshSize, double maxAngleDegrees = 150.0);

/// Red refinement: every triangle splits into four similar ones.
Mesh refineUniform(const Mesh& mesh);

/// Throws MeshError if any triangle is inverted, degenerate, or has an angle
/// above the cap.
void checkMeshQuality(const Mesh& mesh, double maxAngleDegrees);

struct FemSystem {
    SparseMatrix stiffness;
    SparseMatrix mass;
    std::vector<int> dofToNode;
};

/// Piecewise-linear stiffness and consistent mass matrices. Dirichlet
/// eliminates boundary nodes; Neumann keeps every node.
FemSystem assembleP1(const Mesh& mesh, BoundaryCondition bc);

}  // namespace trapspec
