public class DiagonalSum {
    public static int main(String[] args) {
        int[][] grid = {{1, 2, 3}, {4, 5, 6}, {7, 8, 9}};
        int n = grid.length;
        int sum = 0;
        int skipped = 0;
        for (int i = 0; i < n; i++) {
            for (int j = 0; j < n; j++) {
                if (i != j && i + j != n - 1) {
                    skipped++;
                    continue;
                }
                sum += grid[i][j];
            }
        }
        return sum;
    }
}
