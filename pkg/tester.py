from corridorflow.tests.test_corridor import TestGridDecomposition
from corridorflow.tests.test_qp_solver import TestLeastDistanceSolver

qp_tester = TestLeastDistanceSolver()
qp_tester.test_single_halfspace_projection()
qp_tester.test_contradictory_rows_are_infeasible()

grid_tester = TestGridDecomposition()
grid_tester.test_straight_corridor_is_one_box()
grid_tester.test_l_shape_is_two_boxes()
grid_tester.test_bundled_maze()
