public class Crafted {
    public static int main(String[] args) {
        int m = 4;
        int best = 0;
        int count = 0;
        for (int z = m - 1; z >= 0; --z) {
            for (int i = 0; i <= z; ++i) {
                int y = z - i;
                if (y > best) {
                    best = y;
                }
                count++;
            }
        }
        return best;
    }
}
