public class MissingNumber {
    public static int main(String[] args) {
        int[] nums = {3, 0, 1};
        int n = nums.length;
        int expected = n * (n + 1) / 2;
        int actual = 0;
        for (int v : nums) {
            actual += v;
        }
        int missing = expected - actual;
        if (missing < 0) {
            missing = 0;
        }
        return missing;
    }
}
