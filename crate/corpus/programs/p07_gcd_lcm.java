public class GcdLcm {
    static int gcd(int a, int b) {
        while (b != 0) {
            int t = a % b;
            a = b;
            b = t;
        }
        return a;
    }

    public static int main(String[] args) {
        int x = 12;
        int y = 18;
        int g = gcd(x, y);
        int lcm = x / g * y;
        return lcm;
    }
}
