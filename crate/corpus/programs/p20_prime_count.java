public class PrimeCount {
    static boolean isPrime(int n) {
        if (n < 2) {
            return false;
        }
        for (int d = 2; d * d <= n; d++) {
            if (n % d == 0) {
                return false;
            }
        }
        return true;
    }

    public static int main(String[] args) {
        int count = 0;
        int last = 0;
        for (int v = 5; v <= 13; v += 2) {
            if (isPrime(v)) {
                count++;
                last = v;
            }
        }
        return count;
    }
}
