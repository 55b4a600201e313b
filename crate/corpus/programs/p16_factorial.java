public class Factorial {
    static int fact(int n) {
        if (n < 0) {
            return -1;
        }
        if (n <= 1) {
            return 1;
        }
        return n * fact(n - 1);
    }

    public static int main(String[] args) {
        int k = 5;
        int f = fact(k);
        return f;
    }
}
