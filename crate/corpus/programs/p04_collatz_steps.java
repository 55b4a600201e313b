public class CollatzSteps {
    public static int main(String[] args) {
        int n = 6;
        int steps = 0;
        int peak = n;
        while (n != 1) {
            if (n % 2 == 0) {
                n = n / 2;
            } else {
                n = 3 * n + 1;
            }
            if (n > peak) {
                peak = n;
            }
            steps++;
        }
        return steps;
    }
}
