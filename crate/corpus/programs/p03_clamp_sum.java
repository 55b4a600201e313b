public class ClampSum {
    public static int main(String[] args) {
        int[] values = {3, 8, 2, 6};
        int limit = 10;
        int total = 0;
        for (int i = 0; i < values.length; i++) {
            total += values[i];
        }
        if (total > 100) {
            total = limit;
        }
        int bonus = 0;
        if (total % 2 == 1) {
            bonus = 1;
        }
        return total + bonus;
    }
}
